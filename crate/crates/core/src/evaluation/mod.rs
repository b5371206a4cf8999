//! Ranking metrics, win rates, human-evaluation aggregation, the browsing
//! latency model and stage-timing statistics.

pub mod efficiency;
pub mod human;
pub mod ranking;
pub mod timing;
pub mod winrate;

pub use efficiency::{builtin_profile, webgpt_time, EfficiencyEstimate, EfficiencyProfile};
pub use human::{aggregate_human_eval, read_human_eval_csv, HumanEvalRecord, MetricSummary};
pub use ranking::{evaluate_ranking, ndcg, pairwise_accuracy, spearman, NdcgScore, RankingCase};
pub use timing::{timing_summary, TimingSummary};
pub use winrate::{win_rate_matrix, Ballot, WinRateMatrix};

/// Left-aligned first column, right-aligned rest, two spaces between.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate().take(cols) {
            width[i] = width[i].max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let pad = width[i] - c.chars().count();
            if i == 0 {
                out.push_str(c);
                out.push_str(&" ".repeat(pad));
            } else {
                out.push_str(&" ".repeat(pad));
                out.push_str(c);
            }
        }
        out.trim_end().to_string()
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

pub fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    match v {
        Some(x) => format!("{x:.digits$}"),
        None => "-".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment() {
        let t = text_table(&["metric", "mean"], &[vec!["ndcg".into(), "0.5".into()], vec!["spearman".into(), "-1.0000".into()]]);
        assert_eq!(t, "metric       mean\nndcg          0.5\nspearman  -1.0000\n");
    }
}
