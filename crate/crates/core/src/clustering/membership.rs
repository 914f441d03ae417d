use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{FcpcaError, Result};

/// `N×S` row-stochastic matrix of membership degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    values: DMatrix<f64>,
}

impl MembershipMatrix {
    /// Wraps a matrix after checking entries lie in `[0, 1]` and rows sum
    /// to one within `1e-10`.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.ncols() == 0 || values.nrows() == 0 {
            return Err(FcpcaError::InvalidArgument("empty membership matrix".into()));
        }
        for (i, row) in values.row_iter().enumerate() {
            if row.iter().any(|u| !(0.0..=1.0).contains(u)) {
                return Err(FcpcaError::InvalidArgument(format!(
                    "membership row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-10 {
                return Err(FcpcaError::InvalidArgument(format!(
                    "membership row {i} sums to {sum}"
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_series(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_clusters(&self) -> usize {
        self.values.ncols()
    }

    pub fn get(&self, i: usize, s: usize) -> f64 {
        self.values[(i, s)]
    }

    pub fn column(&self, s: usize) -> Vec<f64> {
        self.values.column(s).iter().copied().collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// Lowest-index cluster with the largest membership in row `i`.
    pub fn argmax(&self, i: usize) -> usize {
        let row = self.values.row(i);
        let mut best = 0;
        for s in 1..row.len() {
            if row[s] > row[best] {
                best = s;
            }
        }
        best
    }

    /// Reorders the cluster columns: new column `s` is old column `perm[s]`.
    pub fn permute_clusters(&self, perm: &[usize]) -> Self {
        let values = DMatrix::from_fn(self.n_series(), perm.len(), |i, s| self.values[(i, perm[s])]);
        Self { values }
    }
}

/// Uniform `(0,1)` draws, each row divided by its sum.
pub fn init_membership<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> MembershipMatrix {
    let mut values = DMatrix::zeros(n, s);
    for i in 0..n {
        loop {
            let draws: Vec<f64> = (0..s).map(|_| rng.random::<f64>()).collect();
            let sum: f64 = draws.iter().sum();
            if sum > 0.0 {
                for (j, d) in draws.into_iter().enumerate() {
                    values[(i, j)] = d / sum;
                }
                break;
            }
        }
    }
    MembershipMatrix { values }
}

/// Closed-form membership minimizer for a fixed error matrix:
/// `uᵢₛ = 1 / Σ_{s*} (eᵢₛ / eᵢₛ*)^{1/(m−1)}`.
///
/// A row containing an error below `zero_error_eps` puts all mass on its
/// lowest-index minimal-error cluster.
pub fn update_membership(errors: &DMatrix<f64>, m: f64, zero_error_eps: f64) -> MembershipMatrix {
    let (n, s) = errors.shape();
    let q = 1.0 / (m - 1.0);
    let mut values = DMatrix::zeros(n, s);
    for i in 0..n {
        let row = errors.row(i);
        let mut min_idx = 0;
        for j in 1..s {
            if row[j] < row[min_idx] {
                min_idx = j;
            }
        }
        if row[min_idx] < zero_error_eps {
            values[(i, min_idx)] = 1.0;
            continue;
        }
        // Work relative to the row minimum: (e_s / e_s*)^q = exp(q (ln e_s − ln e_s*)).
        let logs: Vec<f64> = row.iter().map(|e| e.ln()).collect();
        let weights: Vec<f64> = logs
            .iter()
            .map(|&ls| (q * (logs[min_idx] - ls)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        for j in 0..s {
            values[(i, j)] = weights[j] / total;
        }
    }
    MembershipMatrix { values }
}

/// `Σᵢ Σₛ uᵢₛᵐ eᵢₛ`.
pub fn objective(memberships: &MembershipMatrix, errors: &DMatrix<f64>, m: f64) -> f64 {
    memberships
        .values
        .iter()
        .zip(errors.iter())
        .map(|(u, e)| if *u > 0.0 { u.powf(m) * e } else { 0.0 })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrispLabel {
    /// Zero-based cluster index.
    Cluster(usize),
    Mixed,
}

impl fmt::Display for CrispLabel {
    /// Clusters print one-based; mixed rows print as `mixed`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrispLabel::Cluster(s) => write!(f, "{}", s + 1),
            CrispLabel::Mixed => f.write_str("mixed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrispLabels {
    pub labels: Vec<CrispLabel>,
}

impl CrispLabels {
    pub fn mixed_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == CrispLabel::Mixed).count()
    }
}

/// Argmax cluster when its membership reaches `threshold`, otherwise mixed.
pub fn to_crisp(memberships: &MembershipMatrix, threshold: f64) -> CrispLabels {
    let s = memberships.n_clusters();
    if s > 1 && threshold <= 1.0 / s as f64 {
        log::warn!("threshold {threshold} does not exceed 1/S; no row can be mixed");
    }
    let labels = (0..memberships.n_series())
        .map(|i| {
            let best = memberships.argmax(i);
            if memberships.get(i, best) >= threshold {
                CrispLabel::Cluster(best)
            } else {
                CrispLabel::Mixed
            }
        })
        .collect();
    CrispLabels { labels }
}

/// Argmax assignment with no mixed class.
pub fn to_argmax(memberships: &MembershipMatrix) -> Vec<usize> {
    (0..memberships.n_series()).map(|i| memberships.argmax(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn row_sums_ok(u: &MembershipMatrix, tol: f64) -> bool {
        u.values()
            .row_iter()
            .all(|r| (r.iter().sum::<f64>() - 1.0).abs() < tol && r.iter().all(|v| (0.0..=1.0).contains(v)))
    }

    #[test]
    fn init_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let one = init_membership(5, 1, &mut rng);
        assert!(one.values().iter().all(|v| *v == 1.0));
        let u = init_membership(20, 4, &mut rng);
        assert!(row_sums_ok(&u, 1e-12));
        let a = init_membership(6, 3, &mut ChaCha8Rng::seed_from_u64(9));
        let b = init_membership(6, 3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn update_examples() {
        let e = DMatrix::from_row_slice(3, 2, &[1.0, 3.0, 2.0, 2.0, 0.0, 5.0]);
        let u = update_membership(&e, 2.0, 1e-12);
        assert!((u.get(0, 0) - 0.75).abs() < 1e-15);
        assert!((u.get(0, 1) - 0.25).abs() < 1e-15);
        assert_eq!(u.row(1), vec![0.5, 0.5]);
        assert_eq!(u.row(2), vec![1.0, 0.0]);

        let ties = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 1.0]);
        assert_eq!(update_membership(&ties, 1.5, 1e-12).row(0), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn update_handles_extreme_ratios() {
        let e = DMatrix::from_row_slice(1, 2, &[1e-6, 1e6]);
        let u = update_membership(&e, 1.05, 1e-12);
        assert!(row_sums_ok(&u, 1e-12));
        assert_eq!(u.get(0, 0), 1.0);
    }

    #[test]
    fn objective_examples() {
        let u = MembershipMatrix::new(DMatrix::from_row_slice(1, 1, &[1.0])).unwrap();
        assert_eq!(objective(&u, &DMatrix::from_element(1, 1, 7.0), 1.8), 7.0);
        let u = MembershipMatrix::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.2, 0.8])).unwrap();
        assert_eq!(objective(&u, &DMatrix::zeros(2, 2), 2.0), 0.0);
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let direct = 0.25 * 1.0 + 0.25 * 2.0 + 0.04 * 3.0 + 0.64 * 4.0;
        assert!((objective(&u, &e, 2.0) - direct).abs() < 1e-14);
    }

    #[test]
    fn crisp_examples() {
        let u = MembershipMatrix::new(DMatrix::from_row_slice(
            4,
            2,
            &[0.8, 0.2, 0.55, 0.45, 0.65, 0.35, 0.5, 0.5],
        ))
        .unwrap();
        let c7 = to_crisp(&u, 0.7);
        assert_eq!(c7.labels[0], CrispLabel::Cluster(0));
        assert_eq!(c7.labels[1], CrispLabel::Mixed);
        let c6 = to_crisp(&u, 0.6);
        assert_eq!(c6.labels[2], CrispLabel::Cluster(0));
        // Ties resolve to the lowest index.
        assert_eq!(to_crisp(&u, 0.5).labels[3], CrispLabel::Cluster(0));
        assert_eq!(CrispLabel::Cluster(1).to_string(), "2");
        assert_eq!(CrispLabel::Mixed.to_string(), "mixed");
        assert_eq!(c7.mixed_count(), 3);
    }

    #[test]
    fn rejects_invalid_matrices() {
        assert!(MembershipMatrix::new(DMatrix::from_row_slice(1, 2, &[0.6, 0.6])).is_err());
        assert!(MembershipMatrix::new(DMatrix::from_row_slice(1, 2, &[1.5, -0.5])).is_err());
    }
}
