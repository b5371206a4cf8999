//! Citation correction: re-derive each segment's citations from text overlap.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::metrics::{rouge1_tokens, rouge_l_tokens, tokenize};
use crate::model::{parse_answer_markup, Answer, AnswerSegment, Reference};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionMetric {
    #[default]
    Rouge1,
    RougeL,
}

impl CorrectionMetric {
    pub fn default_threshold(self) -> f64 {
        match self {
            Self::Rouge1 => 0.57,
            Self::RougeL => 0.4,
        }
    }

    pub fn f1(self, candidate: &[String], reference: &[String]) -> f64 {
        match self {
            Self::Rouge1 => rouge1_tokens(candidate, reference).f1,
            Self::RougeL => rouge_l_tokens(candidate, reference).f1,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "rouge1" => Some(Self::Rouge1),
            "rougel" => Some(Self::RougeL),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CitationCorrection {
    /// The answer as the model wrote it.
    pub original: Answer,
    pub corrected: Answer,
    /// Cited indices outside the reference list, counted once per segment
    /// that cites them.
    pub invalid_count: usize,
}

fn count_invalid(answer: &Answer, n_refs: usize) -> usize {
    answer
        .segments
        .iter()
        .map(|s| {
            s.citations
                .iter()
                .filter(|&&c| c == 0 || c as usize > n_refs)
                .count()
        })
        .sum()
}

/// Replaces each segment's citations with every reference whose F1 against
/// the segment reaches `threshold`; the model's own marks are ignored.
/// Segments left with neither words nor citations are dropped.
pub fn correct_answer(
    answer: &Answer,
    references: &[Reference],
    metric: CorrectionMetric,
    threshold: f64,
) -> Answer {
    let ref_tokens: Vec<(u32, Vec<String>)> = references
        .iter()
        .map(|r| (r.index, tokenize(&r.text)))
        .collect();
    let segments = answer
        .segments
        .iter()
        .filter_map(|seg| {
            let toks = tokenize(&seg.text);
            let citations: BTreeSet<u32> = ref_tokens
                .iter()
                .filter(|(_, rt)| metric.f1(&toks, rt) >= threshold)
                .map(|(i, _)| *i)
                .collect();
            if toks.is_empty() && citations.is_empty() {
                None
            } else {
                Some(AnswerSegment {
                    text: seg.text.clone(),
                    citations,
                })
            }
        })
        .collect();
    Answer { segments }
}

pub fn correct_parsed(
    original: Answer,
    references: &[Reference],
    metric: CorrectionMetric,
    threshold: f64,
) -> CitationCorrection {
    let invalid_count = count_invalid(&original, references.len());
    let corrected = correct_answer(&original, references, metric, threshold);
    CitationCorrection {
        original,
        corrected,
        invalid_count,
    }
}

/// Parses raw model markup, then corrects it.
pub fn correct_citations(
    raw_answer: &str,
    references: &[Reference],
    metric: CorrectionMetric,
    threshold: f64,
) -> CitationCorrection {
    correct_parsed(parse_answer_markup(raw_answer), references, metric, threshold)
}
