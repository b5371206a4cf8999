//! Dual hashed-unigram encoder trained to regress relevance labels.
//!
//! Each side maps text to an L2-normalized bag of hashed unigrams and then
//! through its own linear projection; relevance is the inner product of the
//! two embeddings. Training minimizes mean squared error against labels.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RegistryError, TrainError};
use crate::metrics::tokenize;

use super::labels::RetrievalLabel;
use super::rank::dot;

pub const ENCODER_FORMAT_VERSION: u32 = 1;

/// Sparse feature vector, sorted by bucket.
pub type SparseVec = Vec<(usize, f64)>;

/// 64-bit FNV-1a; stable across platforms and releases, unlike std's hasher.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// L2-normalized hashed unigram counts.
pub fn hashed_features(text: &str, feature_space_size: usize) -> SparseVec {
    let mut buckets: Vec<usize> = tokenize(text)
        .iter()
        .map(|t| (fnv1a(t.as_bytes()) % feature_space_size as u64) as usize)
        .collect();
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
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderHeader {
    pub dimension: usize,
    pub feature_space_size: usize,
    pub version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub header: EncoderHeader,
    /// Row-major `dimension x feature_space_size`.
    pub query_weights: Vec<f64>,
    pub reference_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGradient {
    pub query: Vec<f64>,
    pub reference: Vec<f64>,
}

/// One featurized training example.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPair {
    pub query: SparseVec,
    pub reference: SparseVec,
    pub label: f64,
}

impl Encoder {
    pub fn zeros(dimension: usize, feature_space_size: usize) -> Self {
        let n = dimension * feature_space_size;
        Self {
            header: EncoderHeader {
                dimension,
                feature_space_size,
                version: ENCODER_FORMAT_VERSION,
            },
            query_weights: vec![0.0; n],
            reference_weights: vec![0.0; n],
        }
    }

    /// Identity projections on both sides; embeddings are the raw features.
    pub fn identity(size: usize) -> Self {
        let mut enc = Self::zeros(size, size);
        for i in 0..size {
            enc.query_weights[i * size + i] = 1.0;
            enc.reference_weights[i * size + i] = 1.0;
        }
        enc
    }

    pub fn dimension(&self) -> usize {
        self.header.dimension
    }

    pub fn feature_space_size(&self) -> usize {
        self.header.feature_space_size
    }

    fn project(&self, weights: &[f64], x: &[(usize, f64)]) -> Vec<f64> {
        let fs = self.feature_space_size();
        (0..self.dimension())
            .map(|k| {
                let row = &weights[k * fs..(k + 1) * fs];
                x.iter().map(|&(f, v)| row[f] * v).sum()
            })
            .collect()
    }

    pub fn features(&self, text: &str) -> SparseVec {
        hashed_features(text, self.feature_space_size())
    }

    pub fn encode_query(&self, text: &str) -> Vec<f64> {
        self.project(&self.query_weights, &self.features(text))
    }

    pub fn encode_reference(&self, text: &str) -> Vec<f64> {
        self.project(&self.reference_weights, &self.features(text))
    }

    pub fn predict(&self, query: &str, reference: &str) -> f64 {
        dot(&self.encode_query(query), &self.encode_reference(reference))
    }

    pub fn predict_encoded(&self, pair: &EncodedPair) -> f64 {
        dot(
            &self.project(&self.query_weights, &pair.query),
            &self.project(&self.reference_weights, &pair.reference),
        )
    }

    pub fn encode_pairs(&self, labels: &[RetrievalLabel]) -> Vec<EncodedPair> {
        labels
            .iter()
            .map(|l| EncodedPair {
                query: self.features(&l.question),
                reference: self.features(&l.reference_text),
                label: l.label,
            })
            .collect()
    }

    /// Mean squared error over `pairs`.
    pub fn mse_loss(&self, pairs: &[EncodedPair]) -> f64 {
        if pairs.is_empty() {
            return 0.0;
        }
        pairs
            .iter()
            .map(|p| (self.predict_encoded(p) - p.label).powi(2))
            .sum::<f64>()
            / pairs.len() as f64
    }

    /// Exact gradient of [`Encoder::mse_loss`] with respect to both weight
    /// matrices.
    pub fn mse_gradient(&self, pairs: &[EncodedPair]) -> EncoderGradient {
        let n = self.query_weights.len();
        let mut grad = EncoderGradient {
            query: vec![0.0; n],
            reference: vec![0.0; n],
        };
        if pairs.is_empty() {
            return grad;
        }
        let scale = 2.0 / pairs.len() as f64;
        for (idx, delta) in self.sparse_gradient(pairs, scale) {
            match idx {
                Param::Query(i) => grad.query[i] += delta,
                Param::Reference(i) => grad.reference[i] += delta,
            }
        }
        grad
    }

    /// Non-zero gradient entries of `scale/2 * sum (pred - label)^2`.
    fn sparse_gradient(&self, pairs: &[EncodedPair], scale: f64) -> Vec<(Param, f64)> {
        let fs = self.feature_space_size();
        let mut out = Vec::new();
        for p in pairs {
            let u = self.project(&self.query_weights, &p.query);
            let v = self.project(&self.reference_weights, &p.reference);
            let err = scale * (dot(&u, &v) - p.label);
            if err == 0.0 {
                continue;
            }
            for k in 0..self.dimension() {
                for &(f, x) in &p.query {
                    out.push((Param::Query(k * fs + f), err * v[k] * x));
                }
                for &(f, x) in &p.reference {
                    out.push((Param::Reference(k * fs + f), err * u[k] * x));
                }
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let raw = std::fs::read(path)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
        let enc: Encoder = serde_json::from_slice(&raw)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
        enc.check().map_err(RegistryError::Load)?;
        Ok(enc)
    }

    fn check(&self) -> Result<(), String> {
        let h = self.header;
        if h.version != ENCODER_FORMAT_VERSION {
            return Err(format!("unsupported encoder version {}", h.version));
        }
        if h.dimension == 0 || h.feature_space_size == 0 {
            return Err("encoder dimension and feature space must be positive".into());
        }
        let n = h.dimension * h.feature_space_size;
        if self.query_weights.len() != n || self.reference_weights.len() != n {
            return Err(format!("encoder weight matrices must have {n} entries"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Param {
    Query(usize),
    Reference(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderTrainConfig {
    pub dimension: usize,
    pub feature_space_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Half-width of the uniform weight initialization.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for EncoderTrainConfig {
    fn default() -> Self {
        Self {
            dimension: 32,
            feature_space_size: 4096,
            learning_rate: 0.2,
            epochs: 60,
            batch_size: 8,
            init_scale: 0.3,
            seed: 0,
        }
    }
}

impl EncoderTrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.dimension == 0 || self.feature_space_size == 0 || self.batch_size == 0 {
            return Err(TrainError::InvalidConfig(
                "dimension, feature_space_size and batch_size must be positive".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(TrainError::InvalidConfig("epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.init_scale >= 0.0) {
            return Err(TrainError::InvalidConfig(
                "learning_rate must be positive and init_scale non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Randomly initialized, untrained encoder.
pub fn init_encoder(config: &EncoderTrainConfig) -> Encoder {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut enc = Encoder::zeros(config.dimension, config.feature_space_size);
    let s = config.init_scale;
    if s > 0.0 {
        for w in enc.query_weights.iter_mut().chain(enc.reference_weights.iter_mut()) {
            *w = rng.random_range(-s..s);
        }
    }
    enc
}

/// Mini-batch gradient descent on MSE. Bitwise reproducible for a given
/// label list and config.
pub fn train_encoder(
    labels: &[RetrievalLabel],
    config: &EncoderTrainConfig,
) -> Result<Encoder, TrainError> {
    config.validate()?;
    if labels.is_empty() {
        return Err(TrainError::Empty);
    }
    let mut enc = init_encoder(config);
    let pairs = enc.encode_pairs(labels);
    // separate stream so initialization and shuffling stay independent
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<EncodedPair> = chunk.iter().map(|&i| pairs[i].clone()).collect();
            let step = config.learning_rate * 2.0 / batch.len() as f64;
            for (param, g) in enc.sparse_gradient(&batch, step) {
                match param {
                    Param::Query(i) => enc.query_weights[i] -= g,
                    Param::Reference(i) => enc.reference_weights[i] -= g,
                }
            }
        }
        let loss = enc.mse_loss(&pairs);
        if !loss.is_finite() {
            return Err(TrainError::Diverged { epoch });
        }
    }
    Ok(enc)
}
