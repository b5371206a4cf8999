//! Linear preference scorer trained on comparison pairs, calibrated to zero
//! mean and unit variance over its training answers.

use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forum::ComparisonPair;
use crate::error::{PreferenceError, RegistryError, TrainError};
use crate::metrics::tokenize;
use crate::model::Answer;
use crate::registry::{require_arg, BackendStatus, Registry};
use crate::retriever::encoder::{fnv1a, SparseVec};

pub const SCORER_VERSION: u32 = 1;

fn bucket(namespace: &str, gram: &str, fs: usize) -> usize {
    let mut key = String::with_capacity(namespace.len() + gram.len());
    key.push_str(namespace);
    key.push_str(gram);
    (fnv1a(key.as_bytes()) % fs as u64) as usize
}

/// Hashed answer unigrams and bigrams (L2-normalized) in `[0, fs)`, then
/// two dense features: log token count and the share of answer tokens that
/// also occur in the question.
pub fn answer_features(question: &str, answer: &str, fs: usize) -> SparseVec {
    let toks = tokenize(answer);
    let mut buckets: Vec<usize> = toks.iter().map(|t| bucket("u:", t, fs)).collect();
    buckets.extend(
        toks.windows(2)
            .map(|w| bucket("b:", &format!("{} {}", w[0], w[1]), fs)),
    );
    buckets.sort_unstable();
    let mut out: SparseVec = Vec::new();
    for b in buckets {
        match out.last_mut() {
            Some((last, c)) if *last == b => *c += 1.0,
            _ => out.push((b, 1.0)),
        }
    }
    let norm = out.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, c) in &mut out {
            *c /= norm;
        }
    }
    let q: std::collections::HashSet<String> = tokenize(question).into_iter().collect();
    let overlap = if toks.is_empty() {
        0.0
    } else {
        toks.iter().filter(|t| q.contains(*t)).count() as f64 / toks.len() as f64
    };
    out.push((fs, (1.0 + toks.len() as f64).ln()));
    out.push((fs + 1, overlap));
    out
}

fn sparse_dot(w: &[f64], x: &SparseVec) -> f64 {
    x.iter().map(|&(i, v)| w[i] * v).sum()
}

/// `a - b` for index-sorted sparse vectors.
fn sparse_diff(a: &SparseVec, b: &SparseVec) -> SparseVec {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                out.push((ia, va - vb));
                i += 1;
                j += 1;
            }
            (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                out.push((ia, va));
                i += 1;
            }
            (Some(&(ia, va)), None) => {
                out.push((ia, va));
                i += 1;
            }
            (_, Some(&(ib, vb))) => {
                out.push((ib, -vb));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// Loss on the score margin `d = score(better) - score(worse)`.
pub trait PairwiseLoss: Send + Sync {
    fn name(&self) -> &str;
    fn loss(&self, margin: f64) -> f64;
    fn derivative(&self, margin: f64) -> f64;
}

/// `-ln sigmoid(d)`.
pub struct LogisticLoss;

impl PairwiseLoss for LogisticLoss {
    fn name(&self) -> &str {
        "logistic"
    }

    fn loss(&self, d: f64) -> f64 {
        // softplus(-d), stable for large |d|
        if d > 0.0 {
            (-d).exp().ln_1p()
        } else {
            -d + d.exp().ln_1p()
        }
    }

    fn derivative(&self, d: f64) -> f64 {
        -1.0 / (1.0 + d.exp())
    }
}

pub struct MarginLoss {
    pub margin: f64,
}

impl PairwiseLoss for MarginLoss {
    fn name(&self) -> &str {
        "margin"
    }

    fn loss(&self, d: f64) -> f64 {
        (self.margin - d).max(0.0)
    }

    fn derivative(&self, d: f64) -> f64 {
        if d < self.margin {
            -1.0
        } else {
            0.0
        }
    }
}

pub fn loss_registry() -> Registry<dyn PairwiseLoss> {
    let mut reg: Registry<dyn PairwiseLoss> = Registry::new("pairwise loss");
    reg.register("logistic", "-ln sigmoid(score gap)", |_| {
        Ok(Arc::new(LogisticLoss) as Arc<dyn PairwiseLoss>)
    });
    reg.register("margin", "hinge on the score gap; optional margin argument (default 1)", |arg| {
        let margin = match arg {
            None => 1.0,
            Some(m) => m
                .parse::<f64>()
                .map_err(|e| RegistryError::Load(format!("bad margin `{m}`: {e}")))?,
        };
        Ok(Arc::new(MarginLoss { margin }) as Arc<dyn PairwiseLoss>)
    });
    reg
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerHeader {
    pub feature_space_size: usize,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scorer {
    pub header: ScorerHeader,
    pub weights: Vec<f64>,
    pub calibration: Option<Calibration>,
}

impl Scorer {
    pub fn zeros(feature_space_size: usize) -> Self {
        Self {
            header: ScorerHeader {
                feature_space_size,
                version: SCORER_VERSION,
            },
            weights: vec![0.0; feature_space_size + 2],
            calibration: None,
        }
    }

    pub fn features(&self, question: &str, answer: &str) -> SparseVec {
        answer_features(question, answer, self.header.feature_space_size)
    }

    pub fn raw_score(&self, question: &str, answer: &str) -> f64 {
        sparse_dot(&self.weights, &self.features(question, answer))
    }

    /// Calibrated when calibration constants are present, raw otherwise.
    pub fn score_text(&self, question: &str, answer: &str) -> f64 {
        let raw = self.raw_score(question, answer);
        match self.calibration {
            Some(c) => (raw - c.mean) / c.std,
            None => raw,
        }
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
        let s: Scorer = serde_json::from_str(&text)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
        if s.header.version != SCORER_VERSION {
            return Err(RegistryError::Load(format!(
                "scorer version {} unsupported",
                s.header.version
            )));
        }
        if s.weights.len() != s.header.feature_space_size + 2 {
            return Err(RegistryError::Load("scorer weight count mismatch".into()));
        }
        if let Some(c) = s.calibration {
            if !(c.std > 0.0) {
                return Err(RegistryError::Load("calibration std must be positive".into()));
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerTrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub feature_space_size: usize,
    pub loss: String,
}

impl Default for ScorerTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 20,
            batch_size: 16,
            seed: 0,
            feature_space_size: 1 << 14,
            loss: "logistic".into(),
        }
    }
}

/// Feature difference `phi(better) - phi(worse)` per pair.
pub fn encode_pairs(pairs: &[ComparisonPair], fs: usize) -> Vec<SparseVec> {
    pairs
        .iter()
        .map(|p| {
            let b = answer_features(&p.question, &p.better.text, fs);
            let w = answer_features(&p.question, &p.worse.text, fs);
            sparse_diff(&b, &w)
        })
        .collect()
}

/// Mean pairwise loss.
pub fn pairwise_objective(weights: &[f64], diffs: &[SparseVec], loss: &dyn PairwiseLoss) -> f64 {
    if diffs.is_empty() {
        return 0.0;
    }
    diffs
        .iter()
        .map(|d| loss.loss(sparse_dot(weights, d)))
        .sum::<f64>()
        / diffs.len() as f64
}

/// Dense gradient of [`pairwise_objective`].
pub fn pairwise_gradient(
    weights: &[f64],
    diffs: &[SparseVec],
    loss: &dyn PairwiseLoss,
) -> Vec<f64> {
    let mut g = vec![0.0; weights.len()];
    if diffs.is_empty() {
        return g;
    }
    let scale = 1.0 / diffs.len() as f64;
    for d in diffs {
        let k = loss.derivative(sparse_dot(weights, d)) * scale;
        for &(i, v) in d {
            g[i] += k * v;
        }
    }
    g
}

/// Mini-batch gradient descent from zero weights; batches follow a seeded
/// shuffle each epoch.
pub fn train_scorer(
    pairs: &[ComparisonPair],
    config: &ScorerTrainConfig,
) -> Result<Scorer, TrainError> {
    if pairs.is_empty() {
        return Err(TrainError::Empty);
    }
    if config.batch_size == 0 || config.feature_space_size == 0 || !(config.learning_rate > 0.0) {
        return Err(TrainError::InvalidConfig(
            "batch_size, feature_space_size and learning_rate must be positive".into(),
        ));
    }
    let loss = loss_registry()
        .build(&config.loss)
        .map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
    let diffs = encode_pairs(pairs, config.feature_space_size);
    let mut scorer = Scorer::zeros(config.feature_space_size);
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let w = &mut scorer.weights;
            let ks: Vec<f64> = batch
                .iter()
                .map(|&i| {
                    let m = sparse_dot(w, &diffs[i]);
                    total += loss.loss(m);
                    loss.derivative(m)
                })
                .collect();
            let step = config.learning_rate / batch.len() as f64;
            for (&i, k) in batch.iter().zip(ks) {
                for &(j, v) in &diffs[i] {
                    w[j] -= step * k * v;
                }
            }
        }
        if !total.is_finite() || scorer.weights.iter().any(|w| !w.is_finite()) {
            return Err(TrainError::Diverged { epoch });
        }
    }
    Ok(scorer)
}

/// Population mean and standard deviation of raw scores over `answers`
/// (question, answer text).
pub fn calibrate_scorer(
    scorer: &Scorer,
    answers: &[(String, String)],
) -> Result<Scorer, PreferenceError> {
    let raw: Vec<f64> = answers
        .iter()
        .map(|(q, a)| scorer.raw_score(q, a))
        .collect();
    let cal = calibration_of(&raw)?;
    let mut out = scorer.clone();
    out.calibration = Some(cal);
    Ok(out)
}

pub fn calibration_of(raw: &[f64]) -> Result<Calibration, PreferenceError> {
    if raw.len() < 2 {
        return Err(PreferenceError::ZeroVariance);
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std > 1e-12) {
        return Err(PreferenceError::ZeroVariance);
    }
    Ok(Calibration { mean, std })
}

/// Anything that can rank candidate answers to a question.
pub trait AnswerScorer: Send + Sync {
    fn name(&self) -> &str;

    fn score(&self, question: &str, answer: &Answer) -> f64;

    fn health(&self) -> BackendStatus {
        BackendStatus::Ok
    }
}

impl AnswerScorer for Scorer {
    fn name(&self) -> &str {
        "linear"
    }

    fn score(&self, question: &str, answer: &Answer) -> f64 {
        self.score_text(question, &answer.plain_text())
    }
}

/// Prefers answers that cite more distinct references, then longer ones.
pub struct StubScorer;

impl AnswerScorer for StubScorer {
    fn name(&self) -> &str {
        "stub"
    }

    fn score(&self, _question: &str, answer: &Answer) -> f64 {
        let tokens = tokenize(&answer.plain_text()).len() as f64;
        answer.distinct_citations().len() as f64 + (1.0 + tokens).ln() / 100.0
    }
}

pub fn scorer_registry() -> Registry<dyn AnswerScorer> {
    let mut reg: Registry<dyn AnswerScorer> = Registry::new("scorer");
    reg.register("stub", "citation-count heuristic, no model file", |_| {
        Ok(Arc::new(StubScorer) as Arc<dyn AnswerScorer>)
    });
    reg.register("linear", "trained linear scorer; argument is the weight file", |arg| {
        let path = require_arg("scorer", "linear", arg)?;
        Ok(Arc::new(Scorer::load(Path::new(path))?) as Arc<dyn AnswerScorer>)
    });
    reg
}

/// Index of the best-scored candidate (lowest index on ties; NaN never
/// wins) and every candidate's score.
pub fn best_of_n(
    question: &str,
    candidates: &[Answer],
    scorer: &dyn AnswerScorer,
) -> Result<(usize, Vec<f64>), PreferenceError> {
    if candidates.is_empty() {
        return Err(PreferenceError::NoCandidates);
    }
    let scores: Vec<f64> = candidates.iter().map(|c| scorer.score(question, c)).collect();
    Ok((argmax(&scores), scores))
}

pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] || (scores[best].is_nan() && !s.is_nan()) {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preference::forum::ForumAnswer;

    fn pair(better: &str, worse: &str) -> ComparisonPair {
        ComparisonPair {
            question_id: "q".into(),
            question: "which?".into(),
            better: ForumAnswer::new("q", "which?", better, 10),
            worse: ForumAnswer::new("q", "which?", worse, 4),
        }
    }

    #[test]
    fn hand_calibration() {
        let c = calibration_of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.mean, 2.0);
        assert!((c.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(((1.0 - c.mean) / c.std + 1.224744871391589).abs() < 1e-9);
        assert_eq!(calibration_of(&[4.0, 4.0]), Err(PreferenceError::ZeroVariance));
    }

    #[test]
    fn logistic_is_stable() {
        let l = LogisticLoss;
        assert!((l.loss(0.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(l.loss(800.0) >= 0.0 && l.loss(800.0) < 1e-300);
        assert!((l.loss(-800.0) - 800.0).abs() < 1e-9);
        assert!((l.derivative(0.0) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_pair_is_learned() {
        let pairs = [pair("thorough helpful explanation", "meh")];
        let s = train_scorer(&pairs, &ScorerTrainConfig { feature_space_size: 64, ..Default::default() }).unwrap();
        assert!(s.raw_score("which?", "thorough helpful explanation") > s.raw_score("which?", "meh"));
    }

    #[test]
    fn sparse_diff_merges() {
        let a = vec![(0, 1.0), (3, 2.0)];
        let b = vec![(1, 1.0), (3, 0.5), (4, 1.0)];
        assert_eq!(sparse_diff(&a, &b), vec![(0, 1.0), (1, -1.0), (3, 1.5), (4, -1.0)]);
    }

    #[test]
    fn argmax_ties_and_nan() {
        assert_eq!(argmax(&[0.2, 1.5, -0.3]), 1);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
        assert_eq!(argmax(&[f64::NAN, 0.0]), 1);
        assert!(best_of_n("q", &[], &StubScorer).is_err());
    }

    #[test]
    fn save_load() {
        let dir = tempdir();
        let path = dir.join("scorer.json");
        let mut s = Scorer::zeros(8);
        s.weights[3] = 0.25;
        s.calibration = Some(Calibration { mean: 0.1, std: 2.0 });
        s.save(&path).unwrap();
        assert_eq!(Scorer::load(&path).unwrap(), s);
        let reg = scorer_registry();
        assert!(reg.build(&format!("linear:{}", path.display())).is_ok());
        assert!(reg.build("linear").is_err());
    }

    fn tempdir() -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!("scorer-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }
}
