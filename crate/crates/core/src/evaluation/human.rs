//! Human-evaluation score sheets: one CSV row per evaluated item.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{FormatError, MetricError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricSpec {
    pub name: &'static str,
    pub max: u8,
    pub blank_allowed: bool,
}

const fn m(name: &'static str, max: u8, blank_allowed: bool) -> MetricSpec {
    MetricSpec {
        name,
        max,
        blank_allowed,
    }
}

/// Reference-side metrics first, then answer-side. All ranges start at 0.
pub const METRICS: [MetricSpec; 11] = [
    m("relevancy", 3, false),
    m("density", 3, false),
    m("reference_truthfulness", 1, true),
    m("toxicity", 1, false),
    m("social_bias", 1, false),
    m("fluency", 3, false),
    m("correctness", 3, false),
    m("citation_accuracy", 3, false),
    m("objectivity", 1, false),
    m("answer_truthfulness", 1, true),
    m("redundancy", 1, false),
];

pub fn metric_spec(name: &str) -> Option<&'static MetricSpec> {
    METRICS.iter().find(|m| m.name == name)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanEvalRecord {
    pub item_id: String,
    /// Only the metrics present in the sheet; `None` is a blank cell.
    pub scores: BTreeMap<String, Option<u8>>,
}

impl HumanEvalRecord {
    pub fn validate(&self) -> Result<(), MetricError> {
        for (name, v) in &self.scores {
            let spec = metric_spec(name).ok_or_else(|| MetricError::OutOfRange {
                item: self.item_id.clone(),
                metric: name.clone(),
                value: "unknown metric".into(),
            })?;
            match v {
                None if !spec.blank_allowed => {
                    return Err(MetricError::Blank {
                        item: self.item_id.clone(),
                        metric: name.clone(),
                    })
                }
                Some(x) if *x > spec.max => {
                    return Err(MetricError::OutOfRange {
                        item: self.item_id.clone(),
                        metric: name.clone(),
                        value: x.to_string(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Header must hold `item_id` plus any subset of the known metric columns.
/// Cells are non-negative integers or empty. Range checks happen in
/// [`aggregate_human_eval`].
pub fn read_human_eval_csv(input: &str) -> Result<Vec<HumanEvalRecord>, FormatError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| FormatError::Line {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let id_col = headers
        .iter()
        .position(|h| h == "item_id")
        .ok_or(FormatError::Line {
            line: 1,
            message: "missing item_id column".into(),
        })?;
    for h in headers.iter() {
        if h != "item_id" && metric_spec(h).is_none() {
            return Err(FormatError::Line {
                line: 1,
                message: format!("unknown column `{h}`"),
            });
        }
    }
    let mut out = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let line = n + 2;
        let row = row.map_err(|e| FormatError::Line {
            line,
            message: e.to_string(),
        })?;
        let mut scores = BTreeMap::new();
        for (col, cell) in row.iter().enumerate() {
            if col == id_col {
                continue;
            }
            let v = if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<u8>().map_err(|_| FormatError::Line {
                    line,
                    message: format!("{}: `{cell}` is not a score", &headers[col]),
                })?)
            };
            scores.insert(headers[col].to_string(), v);
        }
        out.push(HumanEvalRecord {
            item_id: row[id_col].to_string(),
            scores,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub mean: Option<f64>,
    /// Non-blank scores.
    pub n: usize,
}

/// Mean per metric in the canonical metric order, blanks excluded.
pub fn aggregate_human_eval(records: &[HumanEvalRecord]) -> Result<Vec<MetricSummary>, MetricError> {
    for r in records {
        r.validate()?;
    }
    Ok(METRICS
        .iter()
        .filter(|spec| records.iter().any(|r| r.scores.contains_key(spec.name)))
        .map(|spec| {
            let vals: Vec<f64> = records
                .iter()
                .filter_map(|r| r.scores.get(spec.name).copied().flatten())
                .map(f64::from)
                .collect();
            MetricSummary {
                metric: spec.name.to_string(),
                mean: (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64),
                n: vals.len(),
            }
        })
        .collect())
}
