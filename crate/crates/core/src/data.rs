//! Datasets of multivariate series and their precomputed lag structures.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::covariance::{
    augmented_matrix, block_from_parts, center_series, lagged_cross_covariance,
    scale_unit_variance, swap_halves, symmetrize, BlockCovariance, Series,
};
use crate::error::{FcpcaError, Result};
use crate::subspace::{eigen_sym, select_k};

/// An ordered collection of series sharing the same number of variables.
/// Lengths may differ between series.
#[derive(Debug, Clone, PartialEq)]
pub struct MtsDataset {
    series: Vec<Series>,
}

impl MtsDataset {
    pub fn new(series: Vec<Series>) -> Result<Self> {
        let Some(first) = series.first() else {
            return Err(FcpcaError::InvalidInput("dataset has no series".into()));
        };
        let p = first.dim();
        for s in &series {
            if s.dim() != p {
                return Err(FcpcaError::InvalidInput(format!(
                    "series `{}` has {} variables, expected {p}",
                    s.id,
                    s.dim()
                )));
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return Err(FcpcaError::InvalidInput(format!(
                    "series `{}` contains non-finite values",
                    s.id
                )));
            }
        }
        Ok(Self { series })
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.series[0].dim()
    }

    pub fn series(&self) -> &[Series] {
        &self.series
    }

    pub fn ids(&self) -> Vec<String> {
        self.series.iter().map(|s| s.id.clone()).collect()
    }

    /// Every series needs `T ≥ max_lag + 2`.
    pub fn check_lengths(&self, max_lag: usize) -> Result<()> {
        for s in &self.series {
            if s.len() < max_lag + 2 {
                return Err(FcpcaError::InvalidInput(format!(
                    "series `{}` has {} time points; at least {} are needed for lag {max_lag}",
                    s.id,
                    s.len(),
                    max_lag + 2
                )));
            }
        }
        Ok(())
    }
}

/// Centered series plus, for every lag `1..=L`, each series' block
/// covariance and augmented Gram matrix, and the component count fixed from
/// the unweighted grand average of the blocks.
///
/// Grams are stored half-swapped (`J X̂ᵀX̂ J`, rows `(x_t, x_{t−l})`) so that
/// they share the lead-first layout of the block covariances from which
/// the cluster subspaces are built.
#[derive(Debug, Clone)]
pub struct PreparedDataset {
    ids: Vec<String>,
    centered: Vec<Series>,
    /// `blocks[l - 1][i]`
    blocks: Vec<Vec<BlockCovariance>>,
    /// `grams[l - 1][i]`
    grams: Vec<Vec<DMatrix<f64>>>,
    k_per_lag: Vec<usize>,
    degenerate_spectrum: Vec<bool>,
}

impl PreparedDataset {
    pub fn new(
        dataset: &MtsDataset,
        lags: usize,
        var_ratio: f64,
        standardize: bool,
    ) -> Result<Self> {
        if lags == 0 {
            return Err(FcpcaError::InvalidArgument("need at least one lag".into()));
        }
        dataset.check_lengths(lags)?;

        let centered: Vec<Series> = dataset
            .series()
            .iter()
            .map(|s| {
                let (c, _) = center_series(s)?;
                Ok(if standardize { scale_unit_variance(&c) } else { c })
            })
            .collect::<Result<_>>()?;

        let per_series: Vec<(Vec<BlockCovariance>, Vec<DMatrix<f64>>)> = centered
            .par_iter()
            .map(|x| {
                let g0 = lagged_cross_covariance(x, 0)?;
                let mut blocks = Vec::with_capacity(lags);
                let mut grams = Vec::with_capacity(lags);
                for l in 1..=lags {
                    let gl = lagged_cross_covariance(x, l)?;
                    blocks.push(block_from_parts(&g0, &gl)?);
                    let aug = augmented_matrix(x, l)?.matrix;
                    let mut g = swap_halves(&aug.tr_mul(&aug));
                    symmetrize(&mut g);
                    grams.push(g);
                }
                Ok((blocks, grams))
            })
            .collect::<Result<_>>()?;

        let n = centered.len();
        let mut blocks = vec![Vec::with_capacity(n); lags];
        let mut grams = vec![Vec::with_capacity(n); lags];
        for (b, g) in per_series {
            for (l, (bl, gl)) in b.into_iter().zip(g).enumerate() {
                blocks[l].push(bl);
                grams[l].push(gl);
            }
        }

        let mut k_per_lag = Vec::with_capacity(lags);
        let mut degenerate_spectrum = Vec::with_capacity(lags);
        for lag_blocks in &blocks {
            let dim = lag_blocks[0].matrix.nrows();
            let mut avg = DMatrix::zeros(dim, dim);
            for b in lag_blocks {
                avg += &b.matrix;
            }
            avg /= n as f64;
            let eig = eigen_sym(&avg)?;
            let sel = select_k(eig.eigenvalues.as_slice(), var_ratio)?;
            k_per_lag.push(sel.k);
            degenerate_spectrum.push(sel.degenerate);
        }

        Ok(Self {
            ids: dataset.ids(),
            centered,
            blocks,
            grams,
            k_per_lag,
            degenerate_spectrum,
        })
    }

    pub fn len(&self) -> usize {
        self.centered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.is_empty()
    }

    pub fn lags(&self) -> usize {
        self.blocks.len()
    }

    /// The augmented dimension `2p`.
    pub fn augmented_dim(&self) -> usize {
        2 * self.centered[0].dim()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn centered(&self) -> &[Series] {
        &self.centered
    }

    /// Block covariances of all series at `lag` (1-based).
    pub fn blocks(&self, lag: usize) -> &[BlockCovariance] {
        &self.blocks[lag - 1]
    }

    /// Half-swapped augmented Gram matrices `J X̂ᵢ(l)ᵀX̂ᵢ(l) J` of all series
    /// at `lag` (1-based).
    pub fn grams(&self, lag: usize) -> &[DMatrix<f64>] {
        &self.grams[lag - 1]
    }

    pub fn k_per_lag(&self) -> &[usize] {
        &self.k_per_lag
    }

    /// Lags whose grand-average spectrum was entirely non-positive.
    pub fn degenerate_spectrum(&self) -> &[bool] {
        &self.degenerate_spectrum
    }
}
