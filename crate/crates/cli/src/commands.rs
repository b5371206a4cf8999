use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use webglm_core::bootstrap::correct::CorrectionMetric;
use webglm_core::bootstrap::filter::FilterConfig;
use webglm_core::bootstrap::{bootstrap_dataset, filter_triples, BootstrapReport};
use webglm_core::config::Settings;
use webglm_core::error::{FormatError, RetrieveError};
use webglm_core::evaluation::efficiency::{builtin_profile, webgpt_time, EfficiencyProfile, BUILTIN_PROFILES};
use webglm_core::evaluation::human::{aggregate_human_eval, read_human_eval_csv};
use webglm_core::evaluation::ranking::{evaluate_ranking, MetricMean, RankingCase};
use webglm_core::evaluation::timing::timing_summary;
use webglm_core::evaluation::winrate::{win_rate_matrix, Ballot};
use webglm_core::evaluation::{fmt_opt, text_table};
use webglm_core::model::{read_jsonl, read_triples, triple_to_json_line};
use webglm_core::preference::forum::{group_by_question, PairRecord};
use webglm_core::preference::scorer::calibrate_scorer;
use webglm_core::preference::{
    build_baseline_labels, build_preference_pairs, read_forum, train_scorer, BaselineMode,
    ScorerTrainConfig,
};
use webglm_core::retriever::{build_retrieval_labels, train_encoder, EncoderTrainConfig};
use webglm_core::Question;
use webglm_service::AppState;

use crate::args::{Baseline, BackendArgs, Cli, Command, CorrectionArgs, Format, GlobalArgs, Loss};
use crate::CliError;

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::Backend(format!("{}: {e}", path.display())))
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| serde_json::to_string(&x).expect("record serializes") + "\n")
        .collect()
}

pub type Env<'a> = &'a dyn Fn(&str) -> Option<String>;

fn say(out: &mut dyn Write, text: &str) {
    let _ = out.write_all(text.as_bytes());
    if !text.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
    let _ = out.flush();
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Format, value: &T, text: impl FnOnce() -> String) {
    match format {
        Format::Json => say(out, &serde_json::to_string_pretty(value).expect("report serializes")),
        Format::Text => say(out, &text()),
    }
}

/// File, then environment, then flags.
fn settings(global: &GlobalArgs, env: Env) -> Result<Settings, CliError> {
    let mut s = match &global.config {
        Some(p) => Settings::load(p).map_err(|e| CliError::Input(e.to_string()))?,
        None => Settings::default(),
    };
    s.apply_env(env)?;
    if let Some(seed) = global.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn apply_backends(s: &mut Settings, b: &BackendArgs) {
    if let Some(v) = &b.search {
        s.search.provider = v.clone();
    }
    if let Some(v) = &b.fetch {
        s.fetch.source = v.clone();
    }
    if let Some(v) = &b.ranker {
        s.rank.ranker = v.clone();
    }
    if let Some(v) = b.top_k {
        s.rank.top_k = v;
    }
    if let Some(v) = b.fetch_timeout_ms {
        s.fetch.timeout_ms = v;
    }
    if let Some(v) = b.max_parallel {
        s.fetch.max_parallel = v;
    }
    if let Some(v) = &b.llm {
        s.llm.model = Some(v.clone());
    }
    if let Some(v) = &b.scorer {
        s.scorer = Some(v.clone());
    }
}

fn filter_config(base: &FilterConfig, c: &CorrectionArgs) -> Result<FilterConfig, CliError> {
    let mut f = *base;
    if let Some(m) = &c.metric {
        let metric = CorrectionMetric::parse(m)
            .ok_or_else(|| CliError::Usage(format!("unknown metric `{m}`; use rouge1 or rougeL")))?;
        f.correction_metric = metric;
        f.correction_threshold = metric.default_threshold();
    }
    if let Some(t) = c.threshold {
        f.correction_threshold = t;
    }
    f.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(f)
}

#[derive(Deserialize)]
struct QuestionLine {
    question: String,
    #[serde(default)]
    id: Option<String>,
}

/// Plain lines, or JSON lines carrying a `question` field. Ids default to
/// the 1-based line number.
fn read_questions(text: &str) -> Result<Vec<Question>, FormatError> {
    let json = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.trim_start().starts_with('{'));
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = |message: String| FormatError::Line {
            line: n + 1,
            message,
        };
        let (id, q) = if json {
            let rec: QuestionLine = serde_json::from_str(line).map_err(|e| at(e.to_string()))?;
            (rec.id.unwrap_or_else(|| (n + 1).to_string()), rec.question)
        } else {
            ((n + 1).to_string(), line.trim().to_string())
        };
        out.push(Question::new(id, q).map_err(|e| at(e.to_string()))?);
    }
    Ok(out)
}

fn report_text(report: &BootstrapReport) -> String {
    let mut rows = vec![
        vec!["total".to_string(), report.total.to_string()],
        vec!["kept".to_string(), report.kept.to_string()],
    ];
    for (reason, n) in &report.discarded {
        rows.push(vec![reason.clone(), n.to_string()]);
    }
    text_table(&["", "count"], &rows)
}

pub async fn run(cli: Cli, env: Env<'_>, out: &mut dyn Write) -> Result<(), CliError> {
    let format = cli.global.format;
    let mut s = settings(&cli.global, env)?;
    match cli.command {
        Command::Retrieve {
            question,
            input,
            out: dest,
            backends,
        } => {
            apply_backends(&mut s, &backends);
            s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let mut questions: Vec<Question> = question
                .iter()
                .enumerate()
                .map(|(i, q)| Question::new((i + 1).to_string(), q.as_str()))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            if let Some(p) = &input {
                questions.extend(read_questions(&read_input(p)?)?);
            }
            retrieve(&s, &questions, dest.as_deref(), format, out).await
        }
        Command::Bootstrap {
            input,
            out: dest,
            report,
            correction,
            backends,
        } => {
            apply_backends(&mut s, &backends);
            s.bootstrap.filter = filter_config(&s.bootstrap.filter, &correction)?;
            s.bootstrap.generation.seed = s.seed;
            s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let questions = read_questions(&read_input(&input)?)?;
            let retriever = s.build_retriever()?;
            let llm = s.build_llm()?;
            let (kept, rep) = bootstrap_dataset(&questions, &retriever, &*llm, &s.bootstrap).await;
            write_file(&dest, &kept.iter().map(|t| triple_to_json_line(t) + "\n").collect::<String>())?;
            finish_report(&rep, report.as_deref(), format, out)
        }
        Command::Filter {
            input,
            out: dest,
            report,
            correction,
        } => {
            let config = filter_config(&s.bootstrap.filter, &correction)?;
            let triples = read_triples(&read_input(&input)?)?;
            let (kept, rep) = filter_triples(&triples, &config);
            write_file(&dest, &kept.iter().map(|t| triple_to_json_line(t) + "\n").collect::<String>())?;
            finish_report(&rep, report.as_deref(), format, out)
        }
        Command::BuildPrefData {
            input,
            out: dest,
            baseline,
            baseline_out,
        } => {
            let answers = read_forum(&read_input(&input)?)?;
            let (pairs, stats) = build_preference_pairs(&answers);
            write_file(&dest, &jsonl(pairs.iter().map(PairRecord::from)))?;
            let mut labels = None;
            if let Some(mode) = baseline {
                let mode = match mode {
                    Baseline::Classification => BaselineMode::Classification,
                    Baseline::Regression => BaselineMode::Regression,
                };
                let rows = build_baseline_labels(&group_by_question(&answers), mode, s.seed)?;
                let path = baseline_out.unwrap_or_else(|| with_suffix(&dest, "baseline"));
                write_file(&path, &jsonl(&rows))?;
                labels = Some(rows.len());
            }
            let value = json!({ "stats": stats, "baseline_labels": labels });
            emit(out, format, &value, || {
                let mut rows = vec![
                    vec!["answers".into(), stats.answers.to_string()],
                    vec!["questions".into(), stats.questions.to_string()],
                    vec!["qualified_questions".into(), stats.qualified_questions.to_string()],
                    vec!["paired_questions".into(), stats.paired_questions.to_string()],
                    vec!["pairs".into(), stats.pairs.to_string()],
                ];
                if let Some(n) = labels {
                    rows.push(vec!["baseline_labels".into(), n.to_string()]);
                }
                text_table(&["", "count"], &rows)
            });
            Ok(())
        }
        Command::TrainRetriever {
            input,
            out: dest,
            dimension,
            feature_space,
            epochs,
            learning_rate,
            batch_size,
        } => {
            let triples = read_triples(&read_input(&input)?)?;
            let labels = build_retrieval_labels(&triples);
            let d = EncoderTrainConfig::default();
            let config = EncoderTrainConfig {
                dimension: dimension.unwrap_or(d.dimension),
                feature_space_size: feature_space.unwrap_or(d.feature_space_size),
                epochs: epochs.unwrap_or(d.epochs),
                learning_rate: learning_rate.unwrap_or(d.learning_rate),
                batch_size: batch_size.unwrap_or(d.batch_size),
                seed: s.seed,
                ..d
            };
            let before = webglm_core::retriever::encoder::init_encoder(&config);
            let encoder = train_encoder(&labels, &config)?;
            let loss_before = before.mse_loss(&before.encode_pairs(&labels));
            let loss_after = encoder.mse_loss(&encoder.encode_pairs(&labels));
            encoder
                .save(&dest)
                .map_err(|e| CliError::Backend(format!("{}: {e}", dest.display())))?;
            let value = json!({ "labels": labels.len(), "mse_before": loss_before, "mse_after": loss_after });
            emit(out, format, &value, || {
                text_table(
                    &["", "value"],
                    &[
                        vec!["labels".into(), labels.len().to_string()],
                        vec!["mse_before".into(), format!("{loss_before:.6}")],
                        vec!["mse_after".into(), format!("{loss_after:.6}")],
                    ],
                )
            });
            Ok(())
        }
        Command::TrainScorer {
            input,
            out: dest,
            loss,
            feature_space,
            epochs,
            learning_rate,
            batch_size,
        } => {
            let records: Vec<PairRecord> = read_jsonl(&read_input(&input)?)?;
            let pairs: Vec<_> = records.into_iter().map(PairRecord::into_pair).collect();
            let d = ScorerTrainConfig::default();
            let config = ScorerTrainConfig {
                learning_rate: learning_rate.unwrap_or(d.learning_rate),
                epochs: epochs.unwrap_or(d.epochs),
                batch_size: batch_size.unwrap_or(d.batch_size),
                seed: s.seed,
                feature_space_size: feature_space.unwrap_or(d.feature_space_size),
                loss: match loss {
                    Loss::Logistic => "logistic".into(),
                    Loss::Margin => "margin".into(),
                },
            };
            let scorer = train_scorer(&pairs, &config)?;
            let mut seen = BTreeSet::new();
            let answers: Vec<(String, String)> = pairs
                .iter()
                .flat_map(|p| [(p.question.clone(), p.better.text.clone()), (p.question.clone(), p.worse.text.clone())])
                .filter(|x| seen.insert(x.clone()))
                .collect();
            let scorer = calibrate_scorer(&scorer, &answers)?;
            let correct = pairs
                .iter()
                .filter(|p| scorer.raw_score(&p.question, &p.better.text) > scorer.raw_score(&p.question, &p.worse.text))
                .count();
            let accuracy = correct as f64 / pairs.len() as f64;
            scorer
                .save(&dest)
                .map_err(|e| CliError::Backend(format!("{}: {e}", dest.display())))?;
            let cal = scorer.calibration.expect("calibrated");
            let value = json!({
                "pairs": pairs.len(),
                "training_accuracy": accuracy,
                "calibration": cal,
            });
            emit(out, format, &value, || {
                text_table(
                    &["", "value"],
                    &[
                        vec!["pairs".into(), pairs.len().to_string()],
                        vec!["training_accuracy".into(), format!("{accuracy:.4}")],
                        vec!["calibration_mean".into(), format!("{:.6}", cal.mean)],
                        vec!["calibration_std".into(), format!("{:.6}", cal.std)],
                    ],
                )
            });
            Ok(())
        }
        Command::EvalRanking { input } => {
            let cases: Vec<RankingCase> = read_jsonl(&read_input(&input)?)?;
            for (i, c) in cases.iter().enumerate() {
                c.validate().map_err(|e| CliError::Input(format!("case {}: {e}", i + 1)))?;
            }
            let report = evaluate_ranking(&cases)?;
            emit(out, format, &report, || {
                let row = |name: &str, m: &MetricMean| vec![name.to_string(), fmt_opt(m.mean, 4), m.n.to_string()];
                text_table(
                    &["metric", "mean", "n"],
                    &[
                        row("accuracy", &report.accuracy),
                        row("spearman", &report.spearman),
                        row("ndcg", &report.ndcg),
                        row("n-ndcg", &report.normalized_ndcg),
                    ],
                )
            });
            Ok(())
        }
        Command::EvalEfficiency { profile } => eval_efficiency(&profile, format, out),
        Command::EvalHuman { input } => {
            let records = read_human_eval_csv(&read_input(&input)?)?;
            let summary = aggregate_human_eval(&records)?;
            emit(out, format, &summary, || {
                let rows: Vec<Vec<String>> = summary
                    .iter()
                    .map(|m| vec![m.metric.clone(), fmt_opt(m.mean, 3), m.n.to_string()])
                    .collect();
                text_table(&["metric", "mean", "n"], &rows)
            });
            Ok(())
        }
        Command::Winrates { input } => {
            let ballots: Vec<Ballot> = read_jsonl(&read_input(&input)?)?;
            let m = win_rate_matrix(&ballots)?;
            emit(out, format, &m, || {
                let mut headers = vec!["beats"];
                headers.extend(m.systems.iter().map(String::as_str));
                let rows: Vec<Vec<String>> = m
                    .systems
                    .iter()
                    .zip(&m.rates)
                    .map(|(s, r)| {
                        std::iter::once(s.clone())
                            .chain(r.iter().map(|v| fmt_opt(*v, 3)))
                            .collect()
                    })
                    .collect();
                text_table(&headers, &rows)
            });
            Ok(())
        }
        Command::Serve {
            bind,
            log,
            candidates,
            frozen_clock,
            backends,
        } => {
            apply_backends(&mut s, &backends);
            if let Some(b) = bind {
                s.service.bind = b;
            }
            if let Some(l) = log {
                s.service.log_path = Some(l);
            }
            if let Some(n) = candidates {
                s.service.n_candidates = n;
            }
            s.service.frozen_clock |= frozen_clock;
            s.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            serve(&s, out).await
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}.jsonl"))
}

fn finish_report(
    rep: &BootstrapReport,
    path: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if let Some(p) = path {
        write_file(p, &serde_json::to_string_pretty(rep).expect("report serializes"))?;
    }
    emit(out, format, rep, || report_text(rep));
    Ok(())
}

#[derive(Serialize)]
struct RetrieveLine<'a> {
    question: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    references: Option<Vec<webglm_core::Reference>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<webglm_core::retriever::StageTimings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

async fn retrieve(
    s: &Settings,
    questions: &[Question],
    dest: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let retriever = s.build_retriever()?;
    let mut lines = Vec::new();
    let mut timings = Vec::new();
    let mut text = String::new();
    for q in questions {
        match retriever.timed_retrieve(q).await {
            Ok((refs, t)) => {
                text.push_str(&format!("{}\n", q.text));
                for r in &refs {
                    text.push_str(&format!("  [{}] {} <{}>\n", r.index, r.text, r.url));
                }
                timings.push(t);
                lines.push(RetrieveLine {
                    question: &q.text,
                    references: Some(refs),
                    timings: Some(t),
                    error: None,
                });
            }
            Err(RetrieveError::NoParagraphs) => {
                text.push_str(&format!("{}\n  no paragraphs\n", q.text));
                lines.push(RetrieveLine {
                    question: &q.text,
                    references: None,
                    timings: None,
                    error: Some("no_paragraphs".into()),
                });
            }
            Err(RetrieveError::Search(e)) => return Err(CliError::Backend(e.to_string())),
        }
    }
    let body = jsonl(&lines);
    if let Some(p) = dest {
        write_file(p, &body)?;
    }
    match format {
        Format::Json if dest.is_none() => say(out, &body),
        Format::Json => {}
        Format::Text => {
            if let Ok(sum) = timing_summary(&timings) {
                let row = |name: &str, q: &webglm_core::evaluation::timing::Quantiles| {
                    [q.mean, q.median, q.p75, q.p90, q.p99]
                        .iter()
                        .fold(vec![name.to_string()], |mut v, x| {
                            v.push(format!("{x:.3}"));
                            v
                        })
                };
                text.push('\n');
                text.push_str(&text_table(
                    &["stage", "mean", "median", "p75", "p90", "p99"],
                    &[
                        row("search", &sum.t_search),
                        row("fetch", &sum.t_fetch),
                        row("extract", &sum.t_extract),
                        row("rank", &sum.t_rank),
                        row("total", &sum.total),
                    ],
                ));
            }
            say(out, &text);
        }
    }
    Ok(())
}

fn load_profile(spec: &str) -> Result<EfficiencyProfile, CliError> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return builtin_profile(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown builtin profile `{name}`; known: {}",
                BUILTIN_PROFILES.join(", ")
            ))
        });
    }
    let text = read_input(Path::new(spec))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{spec}: {e}")))
}

fn eval_efficiency(spec: &str, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let profile = load_profile(spec)?;
    let est = webgpt_time(&profile)?;
    let actions: Vec<_> = profile
        .actions
        .iter()
        .map(|a| {
            json!({
                "name": a.name,
                "count_per_query": a.count_per_query,
                "tokens_per_action": a.tokens_per_action,
                "product": a.product(),
                "tokens_per_query": a.tokens_per_query(),
            })
        })
        .collect();
    let value = json!({
        "profile": profile.name,
        "actions": actions,
        "tokens_per_query": est.tokens_per_query,
        "t_c": est.t_c,
        "total": est.total,
    });
    emit(out, format, &value, || {
        let rows: Vec<Vec<String>> = profile
            .actions
            .iter()
            .map(|a| {
                vec![
                    a.name.clone(),
                    format!("{:.2}", a.count_per_query),
                    format!("{:.2}", a.tokens_per_action),
                    format!("{:.2}", a.product()),
                    format!("{:.2}", a.tokens_per_query()),
                ]
            })
            .collect();
        let mut t = text_table(&["action", "count", "tokens/action", "product", "tokens/query"], &rows);
        t.push('\n');
        t.push_str(&text_table(
            &[profile.name.as_str(), ""],
            &[
                vec!["tokens_per_query".into(), format!("{:.2}", est.tokens_per_query)],
                vec!["t_c".into(), format!("{:.2}", est.t_c)],
                vec!["total".into(), format!("{:.2}", est.total)],
            ],
        ));
        t
    });
    Ok(())
}

async fn serve(s: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    let state = AppState::from_settings(s).map_err(|e| match e {
        webglm_service::BuildError::Registry(r) => CliError::from(r),
        other => CliError::Backend(other.to_string()),
    })?;
    let listener = tokio::net::TcpListener::bind(&s.service.bind)
        .await
        .map_err(|e| CliError::Backend(format!("bind {}: {e}", s.service.bind)))?;
    let addr = listener
        .local_addr()
        .map_err(|e| CliError::Backend(e.to_string()))?;
    say(out, &format!("listening on http://{addr}"));
    webglm_service::serve(listener, Arc::new(state))
        .await
        .map_err(|e| CliError::Backend(e.to_string()))
}
