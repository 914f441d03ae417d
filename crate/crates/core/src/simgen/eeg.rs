//! EEG-like scenario: every channel mixes five latent AR(2) oscillators,
//! one per canonical rhythm band, plus white observation noise.
//!
//! Group 1 puts most of its variance on delta and gamma, group 2 on theta,
//! alpha and beta, and by default each group has its own channel loadings.
//! A third, fuzzy group combines the two regimes, by default splitting its
//! channels: the first `⌈p/2⌉` follow group 1 and the rest follow group 2.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use super::{derive_seed, ScenarioTruth, SimRng};
use crate::covariance::Series;
use crate::data::MtsDataset;
use crate::error::{FcpcaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EegBand {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl EegBand {
    pub const ALL: [EegBand; 5] = [EegBand::Delta, EegBand::Theta, EegBand::Alpha, EegBand::Beta, EegBand::Gamma];

    /// Design center frequency in Hz.
    pub fn peak_hz(self) -> f64 {
        match self {
            EegBand::Delta => 2.0,
            EegBand::Theta => 6.0,
            EegBand::Alpha => 10.0,
            EegBand::Beta => 20.0,
            EegBand::Gamma => 40.0,
        }
    }

    /// Conventional band edges in Hz.
    pub fn range_hz(self) -> (f64, f64) {
        match self {
            EegBand::Delta => (0.5, 4.0),
            EegBand::Theta => (4.0, 8.0),
            EegBand::Alpha => (8.0, 13.0),
            EegBand::Beta => (13.0, 30.0),
            EegBand::Gamma => (30.0, 64.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EegBand::Delta => "delta",
            EegBand::Theta => "theta",
            EegBand::Alpha => "alpha",
            EegBand::Beta => "beta",
            EegBand::Gamma => "gamma",
        }
    }
}

/// AR(2) oscillator `x_t = φ₁x_{t−1} + φ₂x_{t−2} + e_t` with complex poles
/// `r·e^{±iω}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar2Band {
    pub peak_hz: f64,
    pub sample_rate_hz: f64,
    pub modulus: f64,
    pub phi1: f64,
    pub phi2: f64,
}

/// Places the poles at `modulus · e^{±i 2π peak/rate}`.
pub fn ar2_band_coeffs(peak_hz: f64, sample_rate_hz: f64, modulus: f64) -> Result<Ar2Band> {
    if !(sample_rate_hz > 0.0) {
        return Err(FcpcaError::InvalidArgument("sample rate must be positive".into()));
    }
    if !(peak_hz > 0.0 && peak_hz < sample_rate_hz / 2.0) {
        return Err(FcpcaError::InvalidArgument(format!(
            "peak {peak_hz} Hz must lie strictly between 0 and Nyquist ({} Hz)",
            sample_rate_hz / 2.0
        )));
    }
    if !(modulus > 0.0 && modulus < 1.0) {
        return Err(FcpcaError::InvalidArgument(format!("pole modulus {modulus} outside (0, 1)")));
    }
    let omega = 2.0 * PI * peak_hz / sample_rate_hz;
    Ok(Ar2Band {
        peak_hz,
        sample_rate_hz,
        modulus,
        phi1: 2.0 * modulus * omega.cos(),
        phi2: -modulus * modulus,
    })
}

impl Ar2Band {
    /// Stationary variance under unit innovation variance.
    pub fn stationary_variance(&self) -> f64 {
        let (a, b) = (self.phi1, self.phi2);
        (1.0 - b) / ((1.0 + b) * ((1.0 - b).powi(2) - a * a))
    }

    /// Unit-variance sample path of length `len` after `burnin` warm-up steps.
    pub fn simulate<R: Rng + ?Sized>(&self, len: usize, burnin: usize, rng: &mut R) -> Vec<f64> {
        let scale = self.stationary_variance().sqrt().recip();
        let (mut x1, mut x2) = (0.0, 0.0);
        let mut out = Vec::with_capacity(len);
        for t in 0..len + burnin {
            let e: f64 = StandardNormal.sample(rng);
            let x = self.phi1 * x1 + self.phi2 * x2 + e;
            x2 = x1;
            x1 = x;
            if t >= burnin {
                out.push(x * scale);
            }
        }
        out
    }
}

/// How a fuzzy series combines the two regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FuzzySplit {
    /// First `⌈p/2⌉` channels follow group 1, the rest group 2.
    Channels,
    /// First `⌈T/2⌉` time points follow group 1, the rest group 2.
    Time,
}

/// Whether the channel loadings of the band sources are common to both
/// groups or drawn separately for each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadingMode {
    Shared,
    PerGroup,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EegDesign {
    pub sample_rate_hz: f64,
    pub modulus: f64,
    /// Share of latent variance carried by a group's dominant bands.
    pub dominant_mass: f64,
    /// Observation noise standard deviation, relative to unit latent scale.
    pub noise_sd: f64,
    pub group_size: usize,
    pub burnin: usize,
    pub loadings: LoadingMode,
    pub fuzzy_split: FuzzySplit,
}

impl Default for EegDesign {
    fn default() -> Self {
        Self {
            sample_rate_hz: 128.0,
            modulus: 0.95,
            dominant_mass: 0.9,
            noise_sd: 0.2,
            group_size: 10,
            burnin: 200,
            loadings: LoadingMode::PerGroup,
            fuzzy_split: FuzzySplit::Channels,
        }
    }
}

impl EegDesign {
    pub fn band(&self, band: EegBand) -> Result<Ar2Band> {
        ar2_band_coeffs(band.peak_hz(), self.sample_rate_hz, self.modulus)
    }

    /// Variance share of each band (in [`EegBand::ALL`] order) for a regime
    /// whose dominant bands are `dominant`.
    pub fn band_weights(&self, dominant: &[EegBand]) -> [f64; 5] {
        let n_dom = dominant.len();
        let n_rest = 5 - n_dom;
        let mut w = [0.0; 5];
        for (j, band) in EegBand::ALL.iter().enumerate() {
            w[j] = if dominant.contains(band) {
                self.dominant_mass / n_dom as f64
            } else if n_rest > 0 {
                (1.0 - self.dominant_mass) / n_rest as f64
            } else {
                0.0
            };
        }
        w
    }
}

const GROUP1_BANDS: [EegBand; 2] = [EegBand::Delta, EegBand::Gamma];
const GROUP2_BANDS: [EegBand; 3] = [EegBand::Theta, EegBand::Alpha, EegBand::Beta];

/// `channels × 5` mixing matrix: loadings scaled by the square root of each
/// band's variance share.
fn mixing(loadings: &DMatrix<f64>, weights: &[f64; 5]) -> DMatrix<f64> {
    DMatrix::from_fn(loadings.nrows(), 5, |c, j| weights[j].sqrt() * loadings[(c, j)])
}

/// Mixes the latent band paths with `mix_early` for rows before `switch_at`
/// and `mix_late` afterwards, then adds observation noise.
fn simulate_series<R: Rng + ?Sized>(
    design: &EegDesign,
    bands: &[Ar2Band; 5],
    mix_early: &DMatrix<f64>,
    mix_late: &DMatrix<f64>,
    switch_at: usize,
    len: usize,
    rng: &mut R,
) -> DMatrix<f64> {
    let channels = mix_early.nrows();
    let latent: Vec<Vec<f64>> = bands.iter().map(|b| b.simulate(len, design.burnin, rng)).collect();
    DMatrix::from_fn(len, channels, |t, c| {
        let mix = if t < switch_at { mix_early } else { mix_late };
        let signal: f64 = (0..5).map(|j| mix[(c, j)] * latent[j][t]).sum();
        let noise: f64 = StandardNormal.sample(rng);
        signal + design.noise_sd * noise
    })
}

/// 30 series of `len × channels`: 10 group-1, 10 group-2, 10 fuzzy.
pub fn eeg_scenario<R: Rng + ?Sized>(channels: usize, len: usize, rng: &mut R) -> Result<(MtsDataset, ScenarioTruth)> {
    eeg_scenario_with(channels, len, &EegDesign::default(), rng)
}

pub fn eeg_scenario_with<R: Rng + ?Sized>(
    channels: usize,
    len: usize,
    design: &EegDesign,
    rng: &mut R,
) -> Result<(MtsDataset, ScenarioTruth)> {
    if channels < 2 {
        return Err(FcpcaError::InvalidArgument("need at least two channels".into()));
    }
    if len < 64 {
        return Err(FcpcaError::InvalidArgument("need at least 64 time points".into()));
    }
    let bands = [
        design.band(EegBand::Delta)?,
        design.band(EegBand::Theta)?,
        design.band(EegBand::Alpha)?,
        design.band(EegBand::Beta)?,
        design.band(EegBand::Gamma)?,
    ];
    let l1 = DMatrix::from_fn(channels, 5, |_, _| StandardNormal.sample(rng));
    let l2 = match design.loadings {
        LoadingMode::Shared => l1.clone(),
        LoadingMode::PerGroup => DMatrix::from_fn(channels, 5, |_, _| StandardNormal.sample(rng)),
    };
    let a1 = mixing(&l1, &design.band_weights(&GROUP1_BANDS));
    let a2 = mixing(&l2, &design.band_weights(&GROUP2_BANDS));
    let (fuzzy_early, fuzzy_late, switch_at) = match design.fuzzy_split {
        FuzzySplit::Channels => {
            let split = channels.div_ceil(2);
            let a = DMatrix::from_fn(channels, 5, |c, j| if c < split { a1[(c, j)] } else { a2[(c, j)] });
            (a.clone(), a, len)
        }
        FuzzySplit::Time => (a1.clone(), a2.clone(), len.div_ceil(2)),
    };

    let base = rng.random::<u64>();
    let n = design.group_size;
    let mut series = Vec::with_capacity(3 * n);
    let mut labels = Vec::with_capacity(3 * n);
    let mut fuzzy_indices = Vec::with_capacity(n);
    for i in 0..3 * n {
        let (early, late, switch, label) = match i / n {
            0 => (&a1, &a1, len, "group1"),
            1 => (&a2, &a2, len, "group2"),
            _ => {
                fuzzy_indices.push(i);
                (&fuzzy_early, &fuzzy_late, switch_at, ScenarioTruth::FUZZY)
            }
        };
        let mut series_rng = SimRng::seed_from_u64(derive_seed(base, i as u64));
        let values = simulate_series(design, &bands, early, late, switch, len, &mut series_rng);
        series.push(Series::new(format!("{label}_{i:03}"), values)?);
        labels.push(label.to_string());
    }
    Ok((MtsDataset::new(series)?, ScenarioTruth { labels, fuzzy_indices }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_examples() {
        for peak in [2.0, 10.0, 40.0] {
            let b = ar2_band_coeffs(peak, 128.0, 0.95).unwrap();
            assert!((b.phi2 + 0.9025).abs() < 1e-15);
            assert!(b.phi1.abs() < 2.0 * b.modulus);
        }
        let alpha = ar2_band_coeffs(10.0, 128.0, 0.95).unwrap();
        assert!((alpha.phi1 - 1.676).abs() < 1e-3);
        let quarter = ar2_band_coeffs(32.0, 128.0, 0.95).unwrap();
        assert!(quarter.phi1.abs() < 1e-12);
        assert!(ar2_band_coeffs(0.0, 128.0, 0.95).is_err());
        assert!(ar2_band_coeffs(64.0, 128.0, 0.95).is_err());
        assert!(ar2_band_coeffs(10.0, 128.0, 1.0).is_err());
    }

    #[test]
    fn band_weights_sum_to_one() {
        let d = EegDesign::default();
        let w1 = d.band_weights(&GROUP1_BANDS);
        assert!((w1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((w1[0] - 0.45).abs() < 1e-12 && (w1[4] - 0.45).abs() < 1e-12);
        let w2 = d.band_weights(&GROUP2_BANDS);
        assert!((w2[1] - 0.3).abs() < 1e-12 && (w2[0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn latent_paths_have_unit_variance() {
        let b = ar2_band_coeffs(6.0, 128.0, 0.95).unwrap();
        let x = b.simulate(100_000, 500, &mut SimRng::seed_from_u64(3));
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn scenario_shapes() {
        let (ds, truth) = eeg_scenario(8, 128, &mut SimRng::seed_from_u64(1)).unwrap();
        assert_eq!(ds.len(), 30);
        assert!(ds.series().iter().all(|s| s.len() == 128 && s.dim() == 8));
        assert_eq!(truth.fuzzy_indices, (20..30).collect::<Vec<_>>());
        assert!(eeg_scenario(1, 128, &mut SimRng::seed_from_u64(1)).is_err());
        assert!(eeg_scenario(4, 32, &mut SimRng::seed_from_u64(1)).is_err());
    }
}
