//! Adapted Xie–Beni validity index: weighted reconstruction error over the
//! smallest lag-summed squared distance between cluster projectors.

use super::fuzzy::{BasisGrid, ClusterRun};
use crate::error::{FcpcaError, Result};

/// Separation denominators below this are treated as coincident projectors.
pub const SEPARATION_EPS: f64 = 1e-12;

/// `min_{r≠t} Σ_l ‖P_r(l) − P_t(l)‖²_F`.
pub fn min_projector_separation(bases: &BasisGrid) -> Result<f64> {
    let s = bases.len();
    if s < 2 {
        return Err(FcpcaError::UndefinedCvi);
    }
    let mut best = f64::INFINITY;
    for r in 0..s {
        for t in (r + 1)..s {
            let sep: f64 = bases[r]
                .iter()
                .zip(&bases[t])
                .map(|(a, b)| (&a.projector - &b.projector).norm_squared())
                .sum();
            best = best.min(sep);
        }
    }
    Ok(best)
}

/// CVI of a run; `+∞` when two clusters share (numerically) the same
/// projectors.
pub fn cvi(run: &ClusterRun) -> Result<f64> {
    let separation = min_projector_separation(&run.bases)?;
    let denom = run.memberships.n_series() as f64 * separation;
    if denom < SEPARATION_EPS {
        return Ok(f64::INFINITY);
    }
    Ok(run.objective / denom)
}
