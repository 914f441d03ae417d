//! VARMA simulation and the 22-series VAR / VMA / VARMA(1,1) scenario.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use super::{derive_seed, ScenarioTruth, SimRng};
use crate::covariance::Series;
use crate::data::MtsDataset;
use crate::error::{FcpcaError, Result};

pub const DEFAULT_BURNIN: usize = 200;

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Companion matrix `[[M₁ M₂ … M_q], [I 0 … 0], …]` of a matrix polynomial.
fn companion(coeffs: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = coeffs[0].nrows();
    let q = coeffs.len();
    let mut c = DMatrix::zeros(p * q, p * q);
    for (j, m) in coeffs.iter().enumerate() {
        c.view_mut((0, j * p), (p, p)).copy_from(m);
    }
    for j in 1..q {
        c.view_mut((j * p, (j - 1) * p), (p, p)).fill_with_identity();
    }
    c
}

/// Uniform(−1, 1) entries rescaled to the requested spectral radius.
pub fn random_stable_matrix<R: Rng + ?Sized>(p: usize, target_radius: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(target_radius > 0.0 && target_radius < 1.0) {
        return Err(FcpcaError::InvalidArgument(format!(
            "target radius {target_radius} outside (0, 1)"
        )));
    }
    if p == 0 {
        return Err(FcpcaError::InvalidArgument("dimension must be positive".into()));
    }
    loop {
        let m = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let rho = spectral_radius(&m);
        if rho > 1e-12 && rho.is_finite() {
            return Ok(m * (target_radius / rho));
        }
    }
}

/// `x_t = Σᵢ Φᵢ x_{t−i} + Σⱼ Θⱼ ε_{t−j} + ε_t`, `ε_t ~ N(0, Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarmaSpec {
    p: usize,
    ar: Vec<DMatrix<f64>>,
    ma: Vec<DMatrix<f64>>,
    noise_chol: DMatrix<f64>,
}

impl VarmaSpec {
    /// Validates stationarity (AR companion radius < 1), invertibility (MA
    /// companion radius < 1) and a positive-definite noise covariance.
    pub fn new(p: usize, ar: Vec<DMatrix<f64>>, ma: Vec<DMatrix<f64>>, noise_cov: Option<DMatrix<f64>>) -> Result<Self> {
        if p == 0 {
            return Err(FcpcaError::InvalidArgument("dimension must be positive".into()));
        }
        if ar.iter().chain(&ma).any(|m| m.shape() != (p, p)) {
            return Err(FcpcaError::InvalidArgument(format!("coefficient matrices must be {p}x{p}")));
        }
        if !ar.is_empty() {
            let rho = spectral_radius(&companion(&ar));
            if rho >= 1.0 {
                return Err(FcpcaError::InvalidArgument(format!(
                    "AR part is not stationary (companion radius {rho})"
                )));
            }
        }
        if !ma.is_empty() {
            let neg: Vec<DMatrix<f64>> = ma.iter().map(|m| -m).collect();
            let rho = spectral_radius(&companion(&neg));
            if rho >= 1.0 {
                return Err(FcpcaError::InvalidArgument(format!(
                    "MA part is not invertible (companion radius {rho})"
                )));
            }
        }
        let cov = noise_cov.unwrap_or_else(|| DMatrix::identity(p, p));
        if cov.shape() != (p, p) {
            return Err(FcpcaError::InvalidArgument(format!("noise covariance must be {p}x{p}")));
        }
        let noise_chol = cov
            .cholesky()
            .ok_or_else(|| FcpcaError::InvalidArgument("noise covariance is not positive definite".into()))?
            .l();
        Ok(Self { p, ar, ma, noise_chol })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn ar(&self) -> &[DMatrix<f64>] {
        &self.ar
    }

    pub fn ma(&self) -> &[DMatrix<f64>] {
        &self.ma
    }
}

/// Simulates `burnin + len` steps from a zero state and keeps the last `len`.
pub fn simulate_varma<R: Rng + ?Sized>(spec: &VarmaSpec, len: usize, burnin: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if len == 0 {
        return Err(FcpcaError::InvalidArgument("series length must be positive".into()));
    }
    let p = spec.p;
    let a = spec.ar.len();
    let b = spec.ma.len();
    let total = len + burnin;
    let mut xs: Vec<DVector<f64>> = Vec::with_capacity(total);
    let mut es: Vec<DVector<f64>> = Vec::with_capacity(total);
    for t in 0..total {
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
        let eps = &spec.noise_chol * z;
        let mut x = eps.clone();
        for i in 1..=a.min(t) {
            x.gemv(1.0, &spec.ar[i - 1], &xs[t - i], 1.0);
        }
        for j in 1..=b.min(t) {
            x.gemv(1.0, &spec.ma[j - 1], &es[t - j], 1.0);
        }
        xs.push(x);
        es.push(eps);
    }
    Ok(DMatrix::from_fn(len, p, |t, j| xs[burnin + t][j]))
}

/// Series lengths of a VARMA scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthMode {
    Fixed(usize),
    /// Each length drawn uniformly from `min..=max`.
    Range { min: usize, max: usize },
}

impl LengthMode {
    /// The variable-length setting, `200..=600`.
    pub const RANGE_200_600: LengthMode = LengthMode::Range { min: 200, max: 600 };
}

/// Knobs of the VARMA scenario beyond dimension and lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct VarmaDesign {
    pub n_var: usize,
    pub n_vma: usize,
    pub n_varma: usize,
    /// Spectral radius of `Φ`.
    pub ar_radius: f64,
    /// Spectral radius of `Θ`.
    pub ma_radius: f64,
    pub burnin: usize,
}

impl Default for VarmaDesign {
    fn default() -> Self {
        Self {
            n_var: 10,
            n_vma: 10,
            n_varma: 2,
            ar_radius: 0.9,
            ma_radius: 0.9,
            burnin: DEFAULT_BURNIN,
        }
    }
}

/// 10 VAR(1), 10 VMA(1) and 2 VARMA(1,1) series sharing one `Φ` and one
/// `Θ` per scenario.
pub fn varma_scenario<R: Rng + ?Sized>(p: usize, lengths: LengthMode, rng: &mut R) -> Result<(MtsDataset, ScenarioTruth)> {
    varma_scenario_with(p, lengths, &VarmaDesign::default(), rng)
}

pub fn varma_scenario_with<R: Rng + ?Sized>(
    p: usize,
    lengths: LengthMode,
    design: &VarmaDesign,
    rng: &mut R,
) -> Result<(MtsDataset, ScenarioTruth)> {
    if p == 0 {
        return Err(FcpcaError::InvalidArgument("dimension must be positive".into()));
    }
    let phi = random_stable_matrix(p, design.ar_radius, rng)?;
    let theta = random_stable_matrix(p, design.ma_radius, rng)?;
    let var = VarmaSpec::new(p, vec![phi.clone()], vec![], None)?;
    let vma = VarmaSpec::new(p, vec![], vec![theta.clone()], None)?;
    let varma = VarmaSpec::new(p, vec![phi], vec![theta], None)?;

    let total = design.n_var + design.n_vma + design.n_varma;
    let lens: Vec<usize> = (0..total)
        .map(|_| match lengths {
            LengthMode::Fixed(t) => Ok(t),
            LengthMode::Range { min, max } if min <= max && min > 0 => Ok(rng.random_range(min..=max)),
            LengthMode::Range { min, max } => Err(FcpcaError::InvalidArgument(format!("bad length range {min}..={max}"))),
        })
        .collect::<Result<_>>()?;
    let base = rng.random::<u64>();

    let mut series = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut fuzzy_indices = Vec::new();
    for (i, &len) in lens.iter().enumerate() {
        let (spec, label, prefix) = if i < design.n_var {
            (&var, "var", "var")
        } else if i < design.n_var + design.n_vma {
            (&vma, "vma", "vma")
        } else {
            fuzzy_indices.push(i);
            (&varma, ScenarioTruth::FUZZY, "varma")
        };
        let mut series_rng = SimRng::seed_from_u64(derive_seed(base, i as u64));
        let values = simulate_varma(spec, len, design.burnin, &mut series_rng)?;
        series.push(Series::new(format!("{prefix}_{i:03}"), values)?);
        labels.push(label.to_string());
    }
    Ok((MtsDataset::new(series)?, ScenarioTruth { labels, fuzzy_indices }))
}

/// Two VAR(1) groups built from endpoint matrices `Φ_A` and `Φ_B`. Series
/// `i` of group 1 uses `(1 − wᵢ)Φ_A + wᵢΦ_B` with `wᵢ ~ U(0, overlap)`;
/// group 2 draws `wᵢ ~ U(1 − overlap, 1)`. Interpolants whose spectral
/// radius exceeds `radius` are rescaled to it.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapDesign {
    pub per_group: usize,
    pub overlap: f64,
    pub radius: f64,
    pub burnin: usize,
}

impl Default for OverlapDesign {
    fn default() -> Self {
        Self {
            per_group: 10,
            overlap: 0.4,
            radius: 0.9,
            burnin: DEFAULT_BURNIN,
        }
    }
}

/// Labels are `"a"` and `"b"`; there are no designed-fuzzy series.
pub fn overlap_scenario<R: Rng + ?Sized>(
    p: usize,
    len: usize,
    design: &OverlapDesign,
    rng: &mut R,
) -> Result<(MtsDataset, ScenarioTruth)> {
    if !(0.0..=1.0).contains(&design.overlap) {
        return Err(FcpcaError::InvalidArgument(format!("overlap {} outside [0, 1]", design.overlap)));
    }
    if design.per_group == 0 || len == 0 {
        return Err(FcpcaError::InvalidArgument("need a positive group size and length".into()));
    }
    let phi_a = random_stable_matrix(p, design.radius, rng)?;
    let phi_b = random_stable_matrix(p, design.radius, rng)?;
    let weights: Vec<f64> = (0..2 * design.per_group)
        .map(|i| {
            let u = rng.random::<f64>() * design.overlap;
            if i < design.per_group { u } else { 1.0 - u }
        })
        .collect();
    let base = rng.random::<u64>();

    let mut series = Vec::with_capacity(weights.len());
    let mut labels = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let mut phi = &phi_a * (1.0 - w) + &phi_b * w;
        let rho = spectral_radius(&phi);
        if rho > design.radius {
            phi *= design.radius / rho;
        }
        let spec = VarmaSpec::new(p, vec![phi], vec![], None)?;
        let mut series_rng = SimRng::seed_from_u64(derive_seed(base, i as u64));
        let values = simulate_varma(&spec, len, design.burnin, &mut series_rng)?;
        let label = if i < design.per_group { "a" } else { "b" };
        series.push(Series::new(format!("{label}_{i:03}"), values)?);
        labels.push(label.to_string());
    }
    Ok((
        MtsDataset::new(series)?,
        ScenarioTruth {
            labels,
            fuzzy_indices: Vec::new(),
        },
    ))
}
