//! Point-wise labelings of forum answers used by the baseline scorers.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forum::{rank_answers, AnswerGroup, ForumAnswer};
use crate::error::PreferenceError;

pub const CLASSIFICATION_MIN_ANSWERS: usize = 10;
pub const REGRESSION_MIN_ANSWERS: usize = 5;
const POSITIVES: usize = 5;
const CLASSIFICATION_NEGATIVES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    Classification,
    Regression,
}

impl BaselineMode {
    pub fn min_answers(self) -> usize {
        match self {
            Self::Classification => CLASSIFICATION_MIN_ANSWERS,
            Self::Regression => REGRESSION_MIN_ANSWERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledAnswer {
    pub question_id: String,
    pub question: String,
    pub answer: String,
    pub label: f64,
    /// Borrowed from another question.
    pub negative: bool,
}

pub fn regression_raw_label(thumb_ups: u32) -> f64 {
    (thumb_ups as f64 + 1.0).log2()
}

/// Divides by the group maximum; all zeros when the maximum is zero.
pub fn scale_to_unit(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(0.0_f64, f64::max);
    if max > 0.0 {
        raw.iter().map(|r| r / max).collect()
    } else {
        vec![0.0; raw.len()]
    }
}

fn labeled(g: &AnswerGroup, a: &ForumAnswer, label: f64, negative: bool) -> LabeledAnswer {
    LabeledAnswer {
        question_id: g.question_id.clone(),
        question: g.question.clone(),
        answer: a.text.clone(),
        label,
        negative,
    }
}

/// Groups too small for the chosen mode are skipped. Negatives are drawn
/// without replacement from the answers of every other question.
pub fn build_baseline_labels(
    groups: &[AnswerGroup],
    mode: BaselineMode,
    seed: u64,
) -> Result<Vec<LabeledAnswer>, PreferenceError> {
    let eligible: Vec<usize> = (0..groups.len())
        .filter(|&i| groups[i].answers.len() >= mode.min_answers())
        .collect();
    if eligible.is_empty() {
        return Err(PreferenceError::NotEnoughAnswers {
            required: mode.min_answers(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for &gi in &eligible {
        let g = &groups[gi];
        let pool: Vec<&ForumAnswer> = groups
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != gi)
            .flat_map(|(_, o)| o.answers.iter())
            .collect();
        let n_neg = match mode {
            BaselineMode::Classification => {
                for a in rank_answers(g).into_iter().take(POSITIVES) {
                    out.push(labeled(g, a, 1.0, false));
                }
                CLASSIFICATION_NEGATIVES
            }
            BaselineMode::Regression => {
                let raw: Vec<f64> = g.answers.iter().map(|a| regression_raw_label(a.thumb_ups)).collect();
                let scaled = scale_to_unit(&raw);
                for (a, &s) in g.answers.iter().zip(&scaled) {
                    out.push(labeled(g, a, s, false));
                }
                scaled.iter().sum::<f64>().floor() as usize
            }
        };
        if n_neg == 0 {
            continue;
        }
        if pool.is_empty() {
            return Err(PreferenceError::NoNegativePool);
        }
        let neg_label = match mode {
            BaselineMode::Classification => 0.0,
            BaselineMode::Regression => -1.0,
        };
        let picks: Vec<&&ForumAnswer> = if n_neg >= pool.len() {
            let mut all: Vec<&&ForumAnswer> = pool.iter().collect();
            all.shuffle(&mut rng);
            all
        } else {
            pool.choose_multiple(&mut rng, n_neg).collect()
        };
        for a in picks {
            out.push(labeled(g, a, neg_label, true));
        }
    }
    Ok(out)
}
