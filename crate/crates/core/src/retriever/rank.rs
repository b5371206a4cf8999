//! Paragraph rankers and top-k selection.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use crate::metrics::tokenize;
use crate::model::{Question, Reference};
use crate::registry::{require_arg, Registry};

use super::encoder::Encoder;
use super::extract::Paragraph;

pub const DEFAULT_TOP_K: usize = 5;
pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;

/// Scores paragraphs against a query; higher is more relevant. Returns one
/// score per paragraph, in order.
pub trait Ranker: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, query: &str, paragraphs: &[Paragraph]) -> Vec<f64>;
}

/// Top-`k` paragraphs as a 1..k indexed reference list. Ties on score are
/// broken by paragraph ordinal, then URL.
pub fn rank_paragraphs(
    question: &Question,
    paragraphs: &[Paragraph],
    ranker: &dyn Ranker,
    k: usize,
) -> Vec<Reference> {
    if paragraphs.is_empty() || k == 0 {
        return Vec::new();
    }
    let scores = ranker.score(&question.text, paragraphs);
    debug_assert_eq!(scores.len(), paragraphs.len());
    let mut order: Vec<usize> = (0..paragraphs.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&paragraphs[a], &paragraphs[b]);
        cmp_desc(scores[a], scores[b])
            .then(pa.ordinal.cmp(&pb.ordinal))
            .then_with(|| pa.source_url.cmp(&pb.source_url))
    });
    order
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(rank, i)| Reference {
            index: rank as u32 + 1,
            text: paragraphs[i].text.clone(),
            url: paragraphs[i].source_url.clone(),
            score: Some(scores[i]),
        })
        .collect()
}

/// Descending, with NaN sorted last.
fn cmp_desc(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        _ => b.partial_cmp(&a).unwrap_or(Ordering::Equal),
    }
}

fn term_counts(tokens: &[String]) -> HashMap<&str, f64> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.as_str()).or_insert(0.0) += 1.0;
    }
    m
}

fn document_frequencies(docs: &[Vec<String>]) -> HashMap<&str, usize> {
    let mut df = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    df
}

/// Cosine similarity of smoothed tf-idf vectors, idf estimated over the
/// candidate paragraphs.
#[derive(Debug, Default, Clone, Copy)]
pub struct TfIdfRanker;

impl Ranker for TfIdfRanker {
    fn name(&self) -> &str {
        "tfidf"
    }

    fn score(&self, query: &str, paragraphs: &[Paragraph]) -> Vec<f64> {
        let docs: Vec<Vec<String>> = paragraphs.iter().map(|p| tokenize(&p.text)).collect();
        let df = document_frequencies(&docs);
        let n = docs.len() as f64;
        let idf = |t: &str| ((1.0 + n) / (1.0 + *df.get(t).unwrap_or(&0) as f64)).ln() + 1.0;
        let weigh = |toks: &[String]| -> HashMap<String, f64> {
            term_counts(toks)
                .into_iter()
                .map(|(t, c)| (t.to_string(), c * idf(t)))
                .collect()
        };
        let q = weigh(&tokenize(query));
        let q_norm = q.values().map(|v| v * v).sum::<f64>().sqrt();
        docs.iter()
            .map(|d| {
                let dv = weigh(d);
                let d_norm = dv.values().map(|v| v * v).sum::<f64>().sqrt();
                if q_norm == 0.0 || d_norm == 0.0 {
                    return 0.0;
                }
                let dot: f64 = q.iter().map(|(t, w)| w * dv.get(t).unwrap_or(&0.0)).sum();
                dot / (q_norm * d_norm)
            })
            .collect()
    }
}

/// Okapi BM25 with the non-negative `ln(1 + (N - df + 0.5)/(df + 0.5))` idf.
#[derive(Debug, Clone, Copy)]
pub struct Bm25Ranker {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Ranker {
    fn default() -> Self {
        Self {
            k1: BM25_K1,
            b: BM25_B,
        }
    }
}

impl Ranker for Bm25Ranker {
    fn name(&self) -> &str {
        "bm25"
    }

    fn score(&self, query: &str, paragraphs: &[Paragraph]) -> Vec<f64> {
        let docs: Vec<Vec<String>> = paragraphs.iter().map(|p| tokenize(&p.text)).collect();
        if docs.is_empty() {
            return Vec::new();
        }
        let df = document_frequencies(&docs);
        let n = docs.len() as f64;
        let avgdl = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
        let mut query_terms = tokenize(query);
        query_terms.sort_unstable();
        query_terms.dedup();
        docs.iter()
            .map(|d| {
                let tf = term_counts(d);
                let dl = d.len() as f64;
                query_terms
                    .iter()
                    .map(|t| {
                        let f = *tf.get(t.as_str()).unwrap_or(&0.0);
                        if f == 0.0 {
                            return 0.0;
                        }
                        let dfi = *df.get(t.as_str()).unwrap_or(&0) as f64;
                        let idf = ((n - dfi + 0.5) / (dfi + 0.5) + 1.0).ln();
                        let norm = if avgdl > 0.0 { dl / avgdl } else { 0.0 };
                        idf * f * (self.k1 + 1.0) / (f + self.k1 * (1.0 - self.b + self.b * norm))
                    })
                    .sum()
            })
            .collect()
    }
}

/// Maximum inner product between question and paragraph embeddings.
#[derive(Debug, Clone)]
pub struct DenseRanker {
    encoder: Arc<Encoder>,
}

impl DenseRanker {
    pub fn new(encoder: Arc<Encoder>) -> Self {
        Self { encoder }
    }

    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    /// Scores against a precomputed query embedding.
    pub fn score_embedded(&self, query_embedding: &[f64], paragraphs: &[Paragraph]) -> Vec<f64> {
        paragraphs
            .iter()
            .map(|p| dot(query_embedding, &self.encoder.encode_reference(&p.text)))
            .collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Ranker for DenseRanker {
    fn name(&self) -> &str {
        "dense"
    }

    fn score(&self, query: &str, paragraphs: &[Paragraph]) -> Vec<f64> {
        self.score_embedded(&self.encoder.encode_query(query), paragraphs)
    }
}

pub fn ranker_registry() -> Registry<dyn Ranker> {
    let mut reg: Registry<dyn Ranker> = Registry::new("ranker");
    reg.register("bm25", "Okapi BM25 (k1=1.2, b=0.75)", |_| {
        Ok(Arc::new(Bm25Ranker::default()))
    });
    reg.register("tfidf", "tf-idf cosine similarity", |_| Ok(Arc::new(TfIdfRanker)));
    reg.register("dense", "trained dual encoder, dense:<weights.json>", |arg| {
        let path = require_arg("ranker", "dense", arg)?;
        let enc = Encoder::load(Path::new(path))?;
        Ok(Arc::new(DenseRanker::new(Arc::new(enc))))
    });
    reg
}
