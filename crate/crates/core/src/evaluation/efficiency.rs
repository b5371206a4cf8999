//! Per-query latency model for an agent that browses by emitting actions:
//! action tokens at a fixed generation speed plus search and fetch round
//! trips.

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrowsingAction {
    pub name: String,
    pub count_per_query: f64,
    pub tokens_per_action: f64,
    /// Per-query token figure as reported alongside the two factors. The
    /// reported figure comes from unrounded counts, so it can differ from
    /// `count_per_query * tokens_per_action`.
    #[serde(default)]
    pub reported_tokens_per_query: Option<f64>,
}

impl BrowsingAction {
    pub fn product(&self) -> f64 {
        self.count_per_query * self.tokens_per_action
    }

    pub fn tokens_per_query(&self) -> f64 {
        self.reported_tokens_per_query.unwrap_or_else(|| self.product())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyProfile {
    pub name: String,
    pub actions: Vec<BrowsingAction>,
    /// Tokens per second.
    pub generation_speed: f64,
    /// Seconds per search call.
    pub t_s: f64,
    /// Seconds per page fetch.
    pub t_f: f64,
    pub search_count: f64,
    pub fetch_count: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyEstimate {
    pub tokens_per_query: f64,
    /// Seconds spent generating action tokens.
    pub t_c: f64,
    pub total: f64,
}

pub fn webgpt_time(profile: &EfficiencyProfile) -> Result<EfficiencyEstimate, MetricError> {
    if !(profile.generation_speed > 0.0) {
        return Err(MetricError::NonPositiveSpeed);
    }
    let negative = |field: &str, v: f64| {
        (!(v >= 0.0)).then(|| MetricError::OutOfRange {
            item: profile.name.clone(),
            metric: field.to_string(),
            value: v.to_string(),
        })
    };
    for (f, v) in [
        ("t_s", profile.t_s),
        ("t_f", profile.t_f),
        ("search_count", profile.search_count),
        ("fetch_count", profile.fetch_count),
    ] {
        if let Some(e) = negative(f, v) {
            return Err(e);
        }
    }
    for a in &profile.actions {
        for v in [a.count_per_query, a.tokens_per_action, a.tokens_per_query()] {
            if let Some(e) = negative(&a.name, v) {
                return Err(e);
            }
        }
    }
    let tokens_per_query: f64 = profile.actions.iter().map(|a| a.tokens_per_query()).sum();
    let t_c = tokens_per_query / profile.generation_speed;
    Ok(EfficiencyEstimate {
        tokens_per_query,
        t_c,
        total: t_c + profile.t_s * profile.search_count + profile.t_f * profile.fetch_count,
    })
}

/// Measured stage unit times of the two-stage retriever.
pub const MEASURED_T_S: f64 = 1.81;
pub const MEASURED_T_F: f64 = 2.38;

fn profile(
    name: &str,
    speed: f64,
    rows: &[(&str, f64, f64, f64)],
) -> EfficiencyProfile {
    let count = |n: &str| rows.iter().find(|r| r.0 == n).map(|r| r.1).unwrap_or(0.0);
    EfficiencyProfile {
        name: name.to_string(),
        actions: rows
            .iter()
            .map(|&(n, c, t, q)| BrowsingAction {
                name: n.to_string(),
                count_per_query: c,
                tokens_per_action: t,
                reported_tokens_per_query: Some(q),
            })
            .collect(),
        generation_speed: speed,
        t_s: MEASURED_T_S,
        t_f: MEASURED_T_F,
        search_count: count("search"),
        fetch_count: count("click_link"),
    }
}

pub const BUILTIN_PROFILES: [&str; 2] = ["webgpt175b", "webgpt13b"];

/// Published browsing statistics of the two WebGPT sizes.
pub fn builtin_profile(name: &str) -> Option<EfficiencyProfile> {
    match name {
        "webgpt175b" => Some(profile(
            "webgpt175b",
            20.0,
            &[
                ("search", 3.82, 9.80, 37.46),
                ("click_link", 6.96, 5.00, 34.82),
                ("quote", 3.49, 124.49, 434.80),
                ("back", 5.35, 1.00, 5.35),
                ("scroll_down", 11.41, 4.00, 45.63),
                ("scroll_up", 1.62, 4.00, 6.49),
                ("top", 0.49, 1.00, 0.49),
                ("end", 0.43, 3.00, 1.29),
                ("find_in_page", 0.13, 5.11, 0.68),
                ("invalid", 0.12, 111.09, 13.07),
            ],
        )),
        "webgpt13b" => Some(profile(
            "webgpt13b",
            100.0,
            &[
                ("search", 4.05, 9.65, 39.08),
                ("click_link", 7.56, 5.00, 37.81),
                ("quote", 3.44, 125.85, 433.08),
                ("back", 5.90, 1.00, 5.90),
                ("scroll_down", 10.30, 4.00, 41.21),
                ("scroll_up", 2.01, 4.00, 8.04),
                ("top", 0.32, 1.00, 0.32),
                ("end", 0.44, 3.00, 1.33),
                ("find_in_page", 0.21, 5.04, 1.06),
                ("invalid", 0.10, 136.58, 13.06),
            ],
        )),
        _ => None,
    }
}
