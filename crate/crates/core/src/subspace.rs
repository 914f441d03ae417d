//! Common subspaces: weighted averaging of block covariances, symmetric
//! eigendecomposition, component-count selection, projectors and
//! reconstruction errors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::covariance::{symmetrize, BlockCovariance};
use crate::error::{FcpcaError, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues in descending algebraic
/// order. Column `j` of `eigenvectors` pairs with `eigenvalues[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

/// The first `k` eigenvectors of a common matrix and the projector onto
/// their span.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBasis {
    pub k: usize,
    /// `2p×k`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// `2p×(2p−k)`, the discarded eigenvectors; spans the residual space.
    pub complement: DMatrix<f64>,
    /// `2p×2p`, `C·Cᵀ`.
    pub projector: DMatrix<f64>,
}

impl ProjectionBasis {
    pub fn dim(&self) -> usize {
        self.projector.nrows()
    }
}

/// Outcome of [`select_k`]; `degenerate` is set when the spectrum carried no
/// positive mass and `k` fell back to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KSelection {
    pub k: usize,
    pub degenerate: bool,
}

/// `Σᵢ uᵢᵐ Bᵢ / Σᵢ uᵢᵐ`.
///
/// Fails with [`FcpcaError::DegenerateCluster`] (cluster index 0; callers
/// substitute their own) when the weights sum to zero.
pub fn weighted_common_covariance(
    blocks: &[BlockCovariance],
    memberships: &[f64],
    m: f64,
) -> Result<DMatrix<f64>> {
    let Some(first) = blocks.first() else {
        return Err(FcpcaError::InvalidArgument("no blocks to average".into()));
    };
    if blocks.len() != memberships.len() {
        return Err(FcpcaError::InvalidArgument(format!(
            "{} blocks but {} memberships",
            blocks.len(),
            memberships.len()
        )));
    }
    let dim = first.matrix.nrows();
    let mut acc = DMatrix::zeros(dim, dim);
    let mut total = 0.0;
    // (u / u_max)^m leaves the normalized average unchanged and keeps small
    // memberships from underflowing once raised to m.
    let u_max = memberships.iter().copied().fold(0.0, f64::max);
    for (b, &u) in blocks.iter().zip(memberships) {
        if b.matrix.shape() != (dim, dim) {
            return Err(FcpcaError::InvalidArgument(
                "blocks have different dimensions".into(),
            ));
        }
        let w = if u_max > 0.0 { (u / u_max).powf(m) } else { 0.0 };
        if w > 0.0 {
            acc += &b.matrix * w;
            total += w;
        }
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(FcpcaError::DegenerateCluster { cluster: 0 });
    }
    acc /= total;
    Ok(acc)
}

/// Symmetric eigendecomposition with descending eigenvalues and each
/// eigenvector's largest-magnitude entry made positive.
pub fn eigen_sym(matrix: &DMatrix<f64>) -> Result<EigenSystem> {
    let n = matrix.nrows();
    if matrix.ncols() != n || n == 0 {
        return Err(FcpcaError::InvalidArgument(format!(
            "eigendecomposition needs a non-empty square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(FcpcaError::Numeric("matrix has non-finite entries".into()));
    }
    let scale = matrix.amax().max(1.0);
    let asym = (matrix - matrix.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(FcpcaError::InvalidArgument(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let mut sym = matrix.clone();
    symmetrize(&mut sym);

    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&j| eig.eigenvalues[j]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).clone_owned();
        let lead = v.iter().copied().fold(0.0_f64, |best, x| {
            if x.abs() > best.abs() {
                x
            } else {
                best
            }
        });
        if lead < 0.0 {
            v.neg_mut();
        }
        eigenvectors.set_column(dst, &v);
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// Smallest `r` whose leading eigenvalues carry at least `ratio` of the
/// total. Negative eigenvalues count as zero.
pub fn select_k(eigenvalues: &[f64], ratio: f64) -> Result<KSelection> {
    if eigenvalues.is_empty() {
        return Err(FcpcaError::InvalidArgument("empty spectrum".into()));
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(FcpcaError::InvalidArgument(format!(
            "variance ratio must lie in (0, 1], got {ratio}"
        )));
    }
    let clamped: Vec<f64> = eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if !(total > 0.0) {
        log::warn!("spectrum has no positive mass; falling back to k = 1");
        return Ok(KSelection {
            k: 1,
            degenerate: true,
        });
    }
    // Relative slack absorbs summation rounding so that exact ties such as
    // 9.5 / 10 = 0.95 are not lost.
    let target = ratio * total * (1.0 - 4.0 * f64::EPSILON * clamped.len() as f64);
    let mut cum = 0.0;
    for (r, v) in clamped.iter().enumerate() {
        cum += v;
        if cum >= target {
            return Ok(KSelection {
                k: r + 1,
                degenerate: false,
            });
        }
    }
    Ok(KSelection {
        k: clamped.len(),
        degenerate: false,
    })
}

pub fn make_basis(eigsys: &EigenSystem, k: usize) -> Result<ProjectionBasis> {
    let n = eigsys.eigenvectors.ncols();
    if k == 0 || k > n {
        return Err(FcpcaError::InvalidArgument(format!(
            "component count {k} outside 1..={n}"
        )));
    }
    let basis = eigsys.eigenvectors.columns(0, k).clone_owned();
    let complement = eigsys.eigenvectors.columns(k, n - k).clone_owned();
    let mut projector = &basis * basis.transpose();
    symmetrize(&mut projector);
    Ok(ProjectionBasis {
        k,
        basis,
        complement,
        projector,
    })
}

/// `‖X̂ − X̂P‖_F`, or its square when `squared` is set.
pub fn reconstruction_error(
    xhat: &DMatrix<f64>,
    basis: &ProjectionBasis,
    squared: bool,
) -> Result<f64> {
    if xhat.ncols() != basis.dim() {
        return Err(FcpcaError::InvalidArgument(format!(
            "augmented series has {} columns, basis expects {}",
            xhat.ncols(),
            basis.dim()
        )));
    }
    let residual = xhat - xhat * &basis.projector;
    let sq = residual.norm_squared();
    Ok(if squared { sq } else { sq.sqrt() })
}

/// Squared reconstruction error computed from the Gram matrix `G = X̂ᵀX̂`:
/// `Σⱼ vⱼᵀ G vⱼ` over the complement eigenvectors. Equal to
/// `‖X̂ − X̂P‖²_F` because `I − P` is the projector onto the complement.
pub fn residual_energy(gram: &DMatrix<f64>, basis: &ProjectionBasis) -> Result<f64> {
    if gram.nrows() != basis.dim() || gram.ncols() != basis.dim() {
        return Err(FcpcaError::InvalidArgument(format!(
            "gram is {}x{}, basis expects {}",
            gram.nrows(),
            gram.ncols(),
            basis.dim()
        )));
    }
    if basis.complement.ncols() == 0 {
        return Ok(0.0);
    }
    let gv = gram * &basis.complement;
    let energy: f64 = gv
        .column_iter()
        .zip(basis.complement.column_iter())
        .map(|(a, b)| a.dot(&b))
        .sum();
    Ok(energy.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a + a.transpose()
    }

    fn block(m: DMatrix<f64>) -> BlockCovariance {
        BlockCovariance { lag: 1, matrix: m }
    }

    #[test]
    fn weighted_average_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 4.0]);
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let blocks = vec![block(a.clone()), block(b.clone()), block(c.clone())];

        let uniform = weighted_common_covariance(&blocks, &[0.3, 0.3, 0.3], 1.7).unwrap();
        let plain = (&a + &b + &c) / 3.0;
        assert!((uniform - plain).amax() < 1e-15);

        let single = weighted_common_covariance(&blocks, &[0.0, 1.0, 0.0], 2.0).unwrap();
        assert_eq!(single, b);

        let (u1, u2) = (0.8_f64, 0.35_f64);
        let two = weighted_common_covariance(&blocks[..2], &[u1, u2], 2.0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = (u1 * u1 * a[(i, j)] + u2 * u2 * b[(i, j)]) / (u1 * u1 + u2 * u2);
                assert!((two[(i, j)] - expect).abs() < 1e-15);
            }
        }

        assert!(matches!(
            weighted_common_covariance(&blocks, &[0.0, 0.0, 0.0], 2.0),
            Err(FcpcaError::DegenerateCluster { .. })
        ));
    }

    #[test]
    fn eigen_examples() {
        let e = eigen_sym(&DMatrix::identity(4, 4)).unwrap();
        assert!(e.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-14));

        let e = eigen_sym(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]))).unwrap();
        assert_eq!(e.eigenvalues.as_slice(), &[3.0, 1.0]);
        assert!((e.eigenvectors.column(0) - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-14);
        assert!((e.eigenvectors.column(1) - DVector::from_vec(vec![1.0, 0.0])).amax() < 1e-14);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(eigen_sym(&bad), Err(FcpcaError::Numeric(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(eigen_sym(&asym).is_err());
    }

    #[test]
    fn eigen_reconstructs_random_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 5, 12] {
            let m = random_symmetric(n, &mut rng);
            let e = eigen_sym(&m).unwrap();
            let v = &e.eigenvectors;
            let recon = v * DMatrix::from_diagonal(&e.eigenvalues) * v.transpose();
            assert!((recon - &m).amax() < 1e-8 * m.norm().max(1.0));
            assert!((v.transpose() * v - DMatrix::identity(n, n)).amax() < 1e-10);
            assert!(e.eigenvalues.as_slice().windows(2).all(|w| w[0] >= w[1]));
            for col in v.column_iter() {
                let lead = col.iter().copied().fold(0.0_f64, |b, x| if x.abs() > b.abs() { x } else { b });
                assert!(lead > 0.0);
            }
        }
    }

    #[test]
    fn select_k_examples() {
        assert_eq!(select_k(&[9.0, 0.5, 0.3, 0.2], 0.95).unwrap().k, 2);
        assert_eq!(select_k(&[1.0, 0.0, 0.0, 0.0], 0.95).unwrap().k, 1);
        assert_eq!(select_k(&[1.0, 1.0, 1.0, 1.0], 0.95).unwrap().k, 4);
        assert_eq!(select_k(&[2.0, 1.0, -0.5], 0.6).unwrap().k, 1);
        let deg = select_k(&[0.0, 0.0, -1e-3], 0.95).unwrap();
        assert_eq!(deg, KSelection { k: 1, degenerate: true });
        assert!(select_k(&[1.0], 0.0).is_err());
        assert!(select_k(&[1.0], 1.5).is_err());
    }

    #[test]
    fn basis_examples() {
        let eig = EigenSystem {
            eigenvalues: DVector::from_vec(vec![4.0, 3.0, 2.0, 1.0]),
            eigenvectors: DMatrix::identity(4, 4),
        };
        let b1 = make_basis(&eig, 1).unwrap();
        let mut e1 = DMatrix::zeros(4, 4);
        e1[(0, 0)] = 1.0;
        assert_eq!(b1.projector, e1);
        assert_eq!(b1.projector.trace(), 1.0);
        let full = make_basis(&eig, 4).unwrap();
        assert!((full.projector - DMatrix::identity(4, 4)).amax() < 1e-8);
        assert!(make_basis(&eig, 0).is_err());
        assert!(make_basis(&eig, 5).is_err());
    }

    #[test]
    fn reconstruction_examples() {
        let eig = EigenSystem {
            eigenvalues: DVector::from_vec(vec![2.0, 1.0]),
            eigenvectors: DMatrix::identity(2, 2),
        };
        let e1 = make_basis(&eig, 1).unwrap();
        let x = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert_eq!(reconstruction_error(&x, &e1, false).unwrap(), 1.0);
        assert_eq!(reconstruction_error(&x, &e1, true).unwrap(), 1.0);

        let full = make_basis(&eig, 2).unwrap();
        assert!(reconstruction_error(&x, &full, false).unwrap() < 1e-8);

        let wrong = DMatrix::zeros(3, 3);
        assert!(reconstruction_error(&wrong, &e1, true).is_err());
        assert!(residual_energy(&wrong, &e1).is_err());
    }

    #[test]
    fn reconstruction_matches_entrywise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let x = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-2.0..2.0));
        let eig = eigen_sym(&random_symmetric(4, &mut rng)).unwrap();
        let b = make_basis(&eig, 2).unwrap();
        // Brute force: residual r_ij = x_ij - Σ_a Σ_c x_ia C_ac C_jc.
        let c = &b.basis;
        let mut sq = 0.0;
        for i in 0..5 {
            for j in 0..4 {
                let mut proj = 0.0;
                for a in 0..4 {
                    for col in 0..2 {
                        proj += x[(i, a)] * c[(a, col)] * c[(j, col)];
                    }
                }
                sq += (x[(i, j)] - proj).powi(2);
            }
        }
        let got = reconstruction_error(&x, &b, true).unwrap();
        assert!((got - sq).abs() < 1e-12);
        assert!((reconstruction_error(&x, &b, false).unwrap() - sq.sqrt()).abs() < 1e-12);
        let gram = x.transpose() * &x;
        assert!((residual_energy(&gram, &b).unwrap() - sq).abs() < 1e-10);
    }
}
