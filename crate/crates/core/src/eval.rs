//! Partition agreement: Rand index and fuzzy-series detection.

use std::collections::HashMap;
use std::hash::Hash;

use crate::clustering::{to_crisp, ClusterRun, CrispLabel, MembershipMatrix};
use crate::error::{FcpcaError, Result};
use crate::simgen::ScenarioTruth;

/// A labeling of `N` items over an arbitrary string alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub labels: Vec<String>,
}

impl Partition {
    pub fn new<S: ToString>(labels: impl IntoIterator<Item = S>) -> Self {
        Self {
            labels: labels.into_iter().map(|l| l.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Fraction of item pairs on which two labelings agree (both together or
/// both apart), computed from the contingency table.
pub fn rand_index_labels<A: Eq + Hash, B: Eq + Hash>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(FcpcaError::InvalidArgument(format!(
            "partitions have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as u64;
    if n < 2 {
        return Err(FcpcaError::InvalidArgument("rand index needs at least two items".into()));
    }
    let mut joint: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let together_both: u64 = joint.values().map(|&c| pairs(c)).sum();
    let together_a: u64 = rows.values().map(|&c| pairs(c)).sum();
    let together_b: u64 = cols.values().map(|&c| pairs(c)).sum();
    let total = pairs(n);
    // agreements = TP + TN = total − (together_a − TP) − (together_b − TP)
    let agreements = total + 2 * together_both - together_a - together_b;
    Ok(agreements as f64 / total as f64)
}

pub fn rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    rand_index_labels(&a.labels, &b.labels)
}

/// Number of designed-fuzzy series whose memberships all fall below
/// `threshold`.
pub fn fuzzy_detection_count(memberships: &MembershipMatrix, threshold: f64, truth: &ScenarioTruth) -> Result<usize> {
    let n = memberships.n_series();
    if let Some(&bad) = truth.fuzzy_indices.iter().find(|&&i| i >= n) {
        return Err(FcpcaError::InvalidArgument(format!(
            "fuzzy index {bad} out of range for {n} series"
        )));
    }
    let crisp = to_crisp(memberships, threshold);
    Ok(truth
        .fuzzy_indices
        .iter()
        .filter(|&&i| crisp.labels[i] == CrispLabel::Mixed)
        .count())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioScore {
    pub ri: f64,
    pub detected: usize,
    pub crisp: Partition,
}

/// Crisps the run at `threshold` (mixed rows form their own class) and
/// scores it against the scenario truth, where designed-fuzzy series carry
/// their own class.
pub fn scenario_score(run: &ClusterRun, truth: &ScenarioTruth, threshold: f64) -> Result<ScenarioScore> {
    score_memberships(&run.memberships, truth, threshold)
}

pub fn score_memberships(memberships: &MembershipMatrix, truth: &ScenarioTruth, threshold: f64) -> Result<ScenarioScore> {
    if memberships.n_series() != truth.labels.len() {
        return Err(FcpcaError::InvalidArgument(format!(
            "{} memberships but {} truth labels",
            memberships.n_series(),
            truth.labels.len()
        )));
    }
    let crisp = Partition::new(to_crisp(memberships, threshold).labels);
    let ri = rand_index(&crisp, &truth.partition())?;
    let detected = fuzzy_detection_count(memberships, threshold, truth)?;
    Ok(ScenarioScore { ri, detected, crisp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn rand_index_examples() {
        assert_eq!(rand_index_labels(&[1, 1, 2, 3], &[1, 1, 2, 3]).unwrap(), 1.0);
        assert!((rand_index_labels(&[1, 1, 2], &[1, 2, 2]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rand_index_labels(&[1, 1], &[1, 2]).unwrap(), 0.0);
        assert!(rand_index_labels(&[1, 2], &[1]).is_err());
        assert!(rand_index_labels(&[1], &[1]).is_err());
    }

    #[test]
    fn single_cluster_against_three_groups() {
        let truth: Vec<&str> = std::iter::repeat("a")
            .take(10)
            .chain(std::iter::repeat("b").take(10))
            .chain(std::iter::repeat("f").take(2))
            .collect();
        let one = vec![0; 22];
        let ri = rand_index_labels(&one, &truth).unwrap();
        assert!((ri - 91.0 / 231.0).abs() < 1e-15);
    }

    fn truth_2() -> ScenarioTruth {
        ScenarioTruth {
            labels: vec!["a".into(), "b".into(), "fuzzy".into(), "fuzzy".into()],
            fuzzy_indices: vec![2, 3],
        }
    }

    #[test]
    fn detection_examples() {
        let both = MembershipMatrix::new(DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.5, 0.5])).unwrap();
        assert_eq!(fuzzy_detection_count(&both, 0.7, &truth_2()).unwrap(), 2);
        let none = MembershipMatrix::new(DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.9, 0.1, 0.9, 0.1])).unwrap();
        assert_eq!(fuzzy_detection_count(&none, 0.7, &truth_2()).unwrap(), 0);
        let one = MembershipMatrix::new(DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.9, 0.1])).unwrap();
        assert_eq!(fuzzy_detection_count(&one, 0.7, &truth_2()).unwrap(), 1);

        let bad = ScenarioTruth {
            labels: vec!["a".into(); 4],
            fuzzy_indices: vec![9],
        };
        assert!(fuzzy_detection_count(&one, 0.7, &bad).is_err());
    }

    #[test]
    fn score_of_perfect_recovery() {
        let u = MembershipMatrix::new(DMatrix::from_row_slice(4, 2, &[0.95, 0.05, 0.1, 0.9, 0.5, 0.5, 0.45, 0.55])).unwrap();
        let s = score_memberships(&u, &truth_2(), 0.7).unwrap();
        assert_eq!(s.ri, 1.0);
        assert_eq!(s.detected, 2);
        assert_eq!(s.crisp.labels, vec!["1", "2", "mixed", "mixed"]);
    }
}
