//! Per-series preprocessing and lagged second-moment estimates.
//!
//! Every series is a `T×p` matrix with rows indexing time. The estimators
//! here assume the series has already been mean-centered by
//! [`center_series`]; nothing re-centers internally.
//!
//! Conventions:
//! - `Γ̂(l) = 1/(T−l) · Σ_{t=l}^{T−1} x_t x_{t−l}ᵀ` (zero-based rows), so the
//!   divisor shrinks with the lag.
//! - The block matrix for lag `l` is `[[Γ̂(0), Γ̂(l)], [Γ̂(l)ᵀ, Γ̂(0)]]`.
//! - The augmented matrix for lag `l` stacks `(x_j, x_{j+l})` row pairs.

use nalgebra::{DMatrix, DVector};

use crate::error::{FcpcaError, Result};

/// One multivariate series: rows are time points, columns are variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub id: String,
    pub values: DMatrix<f64>,
}

impl Series {
    pub fn new(id: impl Into<String>, values: DMatrix<f64>) -> Result<Self> {
        let id = id.into();
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(FcpcaError::InvalidInput(format!("series `{id}` is empty")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(FcpcaError::InvalidInput(format!(
                "series `{id}` has a non-finite value at row {r}, column {c}"
            )));
        }
        Ok(Self { id, values })
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }
}

/// Lag-`l` cross-covariance estimate `Γ̂(l)`, a `p×p` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LagCov {
    pub lag: usize,
    pub matrix: DMatrix<f64>,
}

/// The `2p×2p` block matrix pairing lag-0 and lag-`l` estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCovariance {
    pub lag: usize,
    pub matrix: DMatrix<f64>,
}

/// The `(T−l)×2p` matrix of concatenated `(x_j, x_{j+l})` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSeries {
    pub lag: usize,
    pub matrix: DMatrix<f64>,
}

/// Removes each column's sample mean. Returns the centered series and the
/// removed means.
pub fn center_series(x: &Series) -> Result<(Series, DVector<f64>)> {
    if x.values.iter().any(|v| !v.is_finite()) {
        return Err(FcpcaError::InvalidInput(format!(
            "series `{}` contains non-finite values",
            x.id
        )));
    }
    if x.is_empty() {
        return Err(FcpcaError::InvalidInput(format!("series `{}` is empty", x.id)));
    }
    let means = x.values.row_mean().transpose();
    let mut centered = x.values.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        let mu = means[j];
        col.iter_mut().for_each(|v| *v -= mu);
    }
    Ok((
        Series {
            id: x.id.clone(),
            values: centered,
        },
        means,
    ))
}

/// Rescales every column to unit sample variance (divisor `T`). Constant
/// columns are left untouched. Intended for already-centered input.
pub fn scale_unit_variance(x: &Series) -> Series {
    let t = x.len() as f64;
    let mut values = x.values.clone();
    for mut col in values.column_iter_mut() {
        let sd = (col.iter().map(|v| v * v).sum::<f64>() / t).sqrt();
        if sd > 0.0 {
            col.iter_mut().for_each(|v| *v /= sd);
        }
    }
    Series {
        id: x.id.clone(),
        values,
    }
}

/// Sample cross-covariance at `lag` of a centered series.
pub fn lagged_cross_covariance(x: &Series, lag: usize) -> Result<LagCov> {
    let t = x.len();
    if lag >= t {
        return Err(FcpcaError::InvalidLag { lag, len: t });
    }
    let n = t - lag;
    let lead = x.values.rows(lag, n);
    let trail = x.values.rows(0, n);
    let mut matrix = lead.tr_mul(&trail) / n as f64;
    if lag == 0 {
        symmetrize(&mut matrix);
    }
    Ok(LagCov { lag, matrix })
}

/// Block matrix for `lag ≥ 1` computed from a centered series.
pub fn block_covariance(x: &Series, lag: usize) -> Result<BlockCovariance> {
    if lag == 0 {
        return Err(FcpcaError::InvalidArgument(
            "block covariance requires lag >= 1".into(),
        ));
    }
    let g0 = lagged_cross_covariance(x, 0)?;
    let gl = lagged_cross_covariance(x, lag)?;
    block_from_parts(&g0, &gl)
}

/// Assembles `[[Γ̂(0), Γ̂(l)], [Γ̂(l)ᵀ, Γ̂(0)]]` from precomputed estimates.
pub fn block_from_parts(lag0: &LagCov, lagged: &LagCov) -> Result<BlockCovariance> {
    let p = lag0.matrix.nrows();
    if lag0.lag != 0 || lag0.matrix.shape() != (p, p) || lagged.matrix.shape() != (p, p) {
        return Err(FcpcaError::InvalidArgument(
            "block assembly needs a lag-0 estimate and a same-sized lagged estimate".into(),
        ));
    }
    let mut matrix = DMatrix::zeros(2 * p, 2 * p);
    matrix.view_mut((0, 0), (p, p)).copy_from(&lag0.matrix);
    matrix.view_mut((p, p), (p, p)).copy_from(&lag0.matrix);
    matrix.view_mut((0, p), (p, p)).copy_from(&lagged.matrix);
    matrix
        .view_mut((p, 0), (p, p))
        .copy_from(&lagged.matrix.transpose());
    Ok(BlockCovariance {
        lag: lagged.lag,
        matrix,
    })
}

/// Pairs each row with the row `lag` steps later.
pub fn augmented_matrix(x: &Series, lag: usize) -> Result<AugmentedSeries> {
    let t = x.len();
    if lag >= t {
        return Err(FcpcaError::InvalidLag { lag, len: t });
    }
    if lag == 0 {
        return Err(FcpcaError::InvalidArgument(
            "augmented matrix requires lag >= 1".into(),
        ));
    }
    let p = x.dim();
    let n = t - lag;
    let mut matrix = DMatrix::zeros(n, 2 * p);
    matrix.view_mut((0, 0), (n, p)).copy_from(&x.values.rows(0, n));
    matrix.view_mut((0, p), (n, p)).copy_from(&x.values.rows(lag, n));
    Ok(AugmentedSeries { lag, matrix })
}

/// `J M J` for the half-swap permutation `J`: exchanges the two `p`-wide
/// halves of a `2p × 2p` matrix in both rows and columns. Maps the Gram of
/// `(x_{t−l}, x_t)` rows onto the lead-first layout of the block covariance.
pub fn swap_halves(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let p = n / 2;
    DMatrix::from_fn(n, m.ncols(), |i, j| m[((i + p) % n, (j + p) % n)])
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
