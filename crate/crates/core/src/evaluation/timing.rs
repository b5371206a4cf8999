use serde::{Deserialize, Serialize};

use crate::error::MetricError;
use crate::retriever::StageTimings;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub mean: f64,
    pub median: f64,
    pub p75: f64,
    pub p90: f64,
    pub p99: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub n: usize,
    pub t_search: Quantiles,
    pub t_fetch: Quantiles,
    pub t_extract: Quantiles,
    pub t_rank: Quantiles,
    pub total: Quantiles,
}

/// Nearest-rank quantile of ascending `sorted`: the value at rank
/// `ceil(p * n)`, clamped to the first element.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

pub fn quantiles(values: &[f64]) -> Quantiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Quantiles {
        mean: v.iter().sum::<f64>() / v.len() as f64,
        median: nearest_rank(&v, 0.5),
        p75: nearest_rank(&v, 0.75),
        p90: nearest_rank(&v, 0.9),
        p99: nearest_rank(&v, 0.99),
    }
}

pub fn timing_summary(samples: &[StageTimings]) -> Result<TimingSummary, MetricError> {
    if samples.is_empty() {
        return Err(MetricError::TooFewItems(1));
    }
    let of = |f: fn(&StageTimings) -> f64| quantiles(&samples.iter().map(f).collect::<Vec<_>>());
    Ok(TimingSummary {
        n: samples.len(),
        t_search: of(|s| s.t_search),
        t_fetch: of(|s| s.t_fetch),
        t_extract: of(|s| s.t_extract),
        t_rank: of(|s| s.t_rank),
        total: of(StageTimings::total),
    })
}
