//! Quality filter applied to corrected answers, rules checked in order.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::correct::{CitationCorrection, CorrectionMetric};
use crate::error::FormatError;
use crate::metrics::rouge1;
use crate::model::{Answer, Reference};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub correction_metric: CorrectionMetric,
    pub correction_threshold: f64,
    pub min_distinct_citations: usize,
    /// Minimum unigram precision of the answer against all references.
    pub grounding_threshold: f64,
    pub citation_accuracy_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::for_metric(CorrectionMetric::Rouge1)
    }
}

impl FilterConfig {
    pub fn for_metric(metric: CorrectionMetric) -> Self {
        Self {
            correction_metric: metric,
            correction_threshold: metric.default_threshold(),
            min_distinct_citations: 2,
            grounding_threshold: 0.5,
            citation_accuracy_threshold: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        for (name, v) in [
            ("correction_threshold", self.correction_threshold),
            ("grounding_threshold", self.grounding_threshold),
            ("citation_accuracy_threshold", self.citation_accuracy_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(FormatError::Invalid(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    InvalidIndex,
    FewCitations,
    Hallucination,
    LowCitationAccuracy,
    RetrievalError,
    GenerationError,
}

impl DiscardReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::InvalidIndex => "invalid_index",
            Self::FewCitations => "few_citations",
            Self::Hallucination => "hallucination",
            Self::LowCitationAccuracy => "low_citation_accuracy",
            Self::RetrievalError => "retrieval_error",
            Self::GenerationError => "generation_error",
        }
    }
}

impl fmt::Display for DiscardReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterDiagnostics {
    pub invalid_count: usize,
    pub distinct_citations: usize,
    pub grounding_precision: f64,
    pub citation_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterVerdict {
    pub reason: Option<DiscardReason>,
    pub diagnostics: FilterDiagnostics,
}

impl FilterVerdict {
    pub fn keep(&self) -> bool {
        self.reason.is_none()
    }
}

/// Micro-averaged F1 between the model's citation sets and the corrected
/// ones, segment by segment. Segments dropped by correction count as having
/// an empty corrected set. 1.0 when neither side cites anything.
pub fn citation_set_f1(original: &Answer, corrected: &Answer) -> f64 {
    let mut j = 0;
    let (mut overlap, mut n_orig, mut n_corr) = (0usize, 0usize, 0usize);
    for seg in &original.segments {
        n_orig += seg.citations.len();
        if let Some(c) = corrected.segments.get(j) {
            if c.text == seg.text {
                j += 1;
                n_corr += c.citations.len();
                overlap += seg.citations.intersection(&c.citations).count();
            }
        }
    }
    for c in &corrected.segments[j..] {
        n_corr += c.citations.len();
    }
    if n_orig == 0 && n_corr == 0 {
        return 1.0;
    }
    crate::metrics::f1(
        if n_orig == 0 { 0.0 } else { overlap as f64 / n_orig as f64 },
        if n_corr == 0 { 0.0 } else { overlap as f64 / n_corr as f64 },
    )
}

/// Unigram precision of the answer against every reference concatenated.
pub fn grounding_precision(answer: &Answer, references: &[Reference]) -> f64 {
    let all: Vec<&str> = references.iter().map(|r| r.text.as_str()).collect();
    rouge1(&answer.plain_text(), &all.join(" ")).precision
}

pub fn filter_sample(
    correction: &CitationCorrection,
    references: &[Reference],
    config: &FilterConfig,
) -> FilterVerdict {
    let diagnostics = FilterDiagnostics {
        invalid_count: correction.invalid_count,
        distinct_citations: correction.corrected.distinct_citations().len(),
        grounding_precision: grounding_precision(&correction.corrected, references),
        citation_f1: citation_set_f1(&correction.original, &correction.corrected),
    };
    let reason = if diagnostics.invalid_count > 0 {
        Some(DiscardReason::InvalidIndex)
    } else if diagnostics.distinct_citations < config.min_distinct_citations {
        Some(DiscardReason::FewCitations)
    } else if diagnostics.grounding_precision < config.grounding_threshold {
        Some(DiscardReason::Hallucination)
    } else if diagnostics.citation_f1 < config.citation_accuracy_threshold {
        Some(DiscardReason::LowCitationAccuracy)
    } else {
        None
    };
    FilterVerdict {
        reason,
        diagnostics,
    }
}
