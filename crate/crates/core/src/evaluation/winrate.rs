use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

/// One evaluator's ordering of system outputs for a question, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub question_id: String,
    pub ranking: Vec<String>,
}

impl Ballot {
    pub fn validate(&self) -> Result<(), MetricError> {
        let mut seen = HashSet::new();
        if self.ranking.iter().all(|s| seen.insert(s)) {
            Ok(())
        } else {
            Err(MetricError::DuplicateSystem(self.question_id.clone()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateMatrix {
    /// Sorted system ids; row and column order of `rates`.
    pub systems: Vec<String>,
    /// `rates[i][j]`: share of ballots ranking both where `i` beats `j`.
    /// `None` on the diagonal and for pairs never ranked together.
    pub rates: Vec<Vec<Option<f64>>>,
    pub comparisons: Vec<Vec<usize>>,
}

impl WinRateMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.systems.iter().position(|s| s == a)?;
        let j = self.systems.iter().position(|s| s == b)?;
        self.rates[i][j]
    }
}

pub fn win_rate_matrix(ballots: &[Ballot]) -> Result<WinRateMatrix, MetricError> {
    if ballots.is_empty() {
        return Err(MetricError::TooFewItems(1));
    }
    for b in ballots {
        b.validate()?;
    }
    let systems: Vec<String> = ballots
        .iter()
        .flat_map(|b| b.ranking.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |s: &str| systems.binary_search_by(|x| x.as_str().cmp(s)).expect("known system");
    let n = systems.len();
    let mut wins = vec![vec![0usize; n]; n];
    let mut both = vec![vec![0usize; n]; n];
    for b in ballots {
        let ids: Vec<usize> = b.ranking.iter().map(|s| pos(s)).collect();
        for (r, &i) in ids.iter().enumerate() {
            for &j in &ids[r + 1..] {
                wins[i][j] += 1;
                both[i][j] += 1;
                both[j][i] += 1;
            }
        }
    }
    let rates = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (i != j && both[i][j] > 0).then(|| wins[i][j] as f64 / both[i][j] as f64))
                .collect()
        })
        .collect();
    Ok(WinRateMatrix {
        systems,
        rates,
        comparisons: both,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ballot(r: &[&str]) -> Ballot {
        Ballot {
            question_id: "q".into(),
            ranking: r.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn single_ballot() {
        let m = win_rate_matrix(&[ballot(&["A", "B", "human"])]).unwrap();
        assert_eq!(m.get("A", "B"), Some(1.0));
        assert_eq!(m.get("A", "human"), Some(1.0));
        assert_eq!(m.get("B", "human"), Some(1.0));
        assert_eq!(m.get("human", "A"), Some(0.0));
        assert_eq!(m.get("A", "A"), None);
    }

    #[test]
    fn opposite_ballots_split() {
        let m = win_rate_matrix(&[ballot(&["A", "B"]), ballot(&["B", "A"])]).unwrap();
        assert_eq!(m.get("A", "B"), Some(0.5));
        assert_eq!(m.get("B", "A"), Some(0.5));
    }

    #[test]
    fn absent_pairs_and_duplicates() {
        let m = win_rate_matrix(&[ballot(&["A", "B"]), ballot(&["C", "D"])]).unwrap();
        assert_eq!(m.get("A", "C"), None);
        assert!(win_rate_matrix(&[ballot(&["A", "A"])]).is_err());
        assert!(win_rate_matrix(&[]).is_err());
    }
}
