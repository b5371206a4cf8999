//! Unigram and longest-common-subsequence ROUGE.
//!
//! Tokens are lowercase maximal runs of alphanumeric characters. Unigram
//! overlap uses clipped counts, so repeating a word in the candidate does not
//! inflate precision.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub const ZERO: RougeScore = RougeScore {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };

    pub fn from_counts(matches: usize, candidate_len: usize, reference_len: usize) -> Self {
        if candidate_len == 0 || reference_len == 0 {
            return Self::ZERO;
        }
        let precision = matches as f64 / candidate_len as f64;
        let recall = matches as f64 / reference_len as f64;
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

/// Balanced F-measure, zero when both inputs are zero.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Byte ranges of every token in `text`.
pub fn token_spans(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            spans.push(s..i);
        }
    }
    if let Some(s) = start {
        spans.push(s..text.len());
    }
    spans
}

pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|r| text[r].to_lowercase())
        .collect()
}

fn counts(tokens: &[String]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

pub fn rouge1_tokens(candidate: &[String], reference: &[String]) -> RougeScore {
    let cand = counts(candidate);
    let refc = counts(reference);
    let matches: usize = cand
        .iter()
        .map(|(tok, &n)| n.min(refc.get(tok).copied().unwrap_or(0)))
        .sum();
    RougeScore::from_counts(matches, candidate.len(), reference.len())
}

pub fn rouge1(candidate: &str, reference: &str) -> RougeScore {
    rouge1_tokens(&tokenize(candidate), &tokenize(reference))
}

/// LCS length with a rolling single row.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l_tokens(candidate: &[String], reference: &[String]) -> RougeScore {
    RougeScore::from_counts(
        lcs_len(candidate, reference),
        candidate.len(),
        reference.len(),
    )
}

pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference))
}
