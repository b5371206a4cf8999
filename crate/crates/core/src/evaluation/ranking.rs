//! Agreement between a predicted ordering and graded true labels.

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingCase {
    pub predicted_scores: Vec<f64>,
    pub true_labels: Vec<f64>,
}

impl RankingCase {
    pub fn new(predicted_scores: Vec<f64>, true_labels: Vec<f64>) -> Result<Self, MetricError> {
        let c = Self {
            predicted_scores,
            true_labels,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if self.predicted_scores.len() != self.true_labels.len() {
            return Err(MetricError::LengthMismatch(
                self.predicted_scores.len(),
                self.true_labels.len(),
            ));
        }
        if self.true_labels.is_empty() {
            return Err(MetricError::TooFewItems(1));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.true_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.true_labels.is_empty()
    }
}

/// Over pairs with distinct true labels, the share ordered the same way by
/// the predictions. Tied predictions count half.
pub fn pairwise_accuracy(case: &RankingCase) -> Result<f64, MetricError> {
    case.validate()?;
    if case.len() < 2 {
        return Err(MetricError::TooFewItems(2));
    }
    let (p, t) = (&case.predicted_scores, &case.true_labels);
    let (mut credit, mut pairs) = (0.0, 0usize);
    for i in 0..case.len() {
        for j in (i + 1)..case.len() {
            if t[i] == t[j] {
                continue;
            }
            pairs += 1;
            if p[i] == p[j] {
                credit += 0.5;
            } else if (p[i] > p[j]) == (t[i] > t[j]) {
                credit += 1.0;
            }
        }
    }
    if pairs == 0 {
        return Err(MetricError::Undefined("pairwise accuracy with all labels tied"));
    }
    Ok(credit / pairs as f64)
}

/// 1-based ranks, ascending by value; tied values share their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    (va > 0.0 && vb > 0.0).then(|| (cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(case: &RankingCase) -> Result<f64, MetricError> {
    case.validate()?;
    if case.len() < 2 {
        return Err(MetricError::TooFewItems(2));
    }
    pearson(
        &average_ranks(&case.predicted_scores),
        &average_ranks(&case.true_labels),
    )
    .ok_or(MetricError::Undefined("spearman with a constant side"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NdcgScore {
    pub ndcg: f64,
    pub normalized_ndcg: f64,
}

pub fn dcg(labels_in_order: &[f64]) -> f64 {
    labels_in_order
        .iter()
        .enumerate()
        .map(|(i, l)| l / (i as f64 + 2.0).log2())
        .sum()
}

/// Items sorted by descending prediction, ties kept in input order.
pub fn predicted_order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// NDCG over the full predicted order, and the same value rescaled so the
/// worst (ascending-label) order maps to 0.
pub fn ndcg(case: &RankingCase) -> Result<NdcgScore, MetricError> {
    case.validate()?;
    if let Some(l) = case.true_labels.iter().find(|l| !(**l >= 0.0)) {
        return Err(MetricError::OutOfRange {
            item: "ranking case".into(),
            metric: "true_label".into(),
            value: l.to_string(),
        });
    }
    let labels = &case.true_labels;
    let ordered: Vec<f64> = predicted_order(&case.predicted_scores)
        .into_iter()
        .map(|i| labels[i])
        .collect();
    let mut ideal = labels.clone();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        return Ok(NdcgScore {
            ndcg: 0.0,
            normalized_ndcg: 0.0,
        });
    }
    let mut worst = ideal.clone();
    worst.reverse();
    let value = dcg(&ordered) / idcg;
    let worst = dcg(&worst) / idcg;
    let normalized_ndcg = if 1.0 - worst <= 1e-12 {
        1.0
    } else {
        ((value - worst) / (1.0 - worst)).clamp(0.0, 1.0)
    };
    Ok(NdcgScore {
        ndcg: value,
        normalized_ndcg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMean {
    pub mean: Option<f64>,
    /// Cases where the metric was defined.
    pub n: usize,
}

impl MetricMean {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64),
            n: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub cases: usize,
    pub accuracy: MetricMean,
    pub spearman: MetricMean,
    pub ndcg: MetricMean,
    pub normalized_ndcg: MetricMean,
}

/// Means over cases; a case where a metric is undefined is left out of that
/// metric only.
pub fn evaluate_ranking(cases: &[RankingCase]) -> Result<RankingReport, MetricError> {
    let (mut acc, mut sp, mut nd, mut nnd) = (vec![], vec![], vec![], vec![]);
    for c in cases {
        c.validate()?;
        if let Ok(v) = pairwise_accuracy(c) {
            acc.push(v);
        }
        if let Ok(v) = spearman(c) {
            sp.push(v);
        }
        let n = ndcg(c)?;
        nd.push(n.ndcg);
        nnd.push(n.normalized_ndcg);
    }
    Ok(RankingReport {
        cases: cases.len(),
        accuracy: MetricMean::of(&acc),
        spearman: MetricMean::of(&sp),
        ndcg: MetricMean::of(&nd),
        normalized_ndcg: MetricMean::of(&nnd),
    })
}
