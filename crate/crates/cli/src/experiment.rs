//! Seeded simulate → fit → score cycles.

use std::collections::BTreeMap;

use fcpca_core::clustering::fcpca_fit;
use fcpca_core::eval::scenario_score;
use fcpca_core::simgen::{
    eeg_scenario_with, overlap_scenario, varma_scenario_with, EegDesign, FuzzySplit, LengthMode, LoadingMode,
    OverlapDesign, ScenarioTruth, SimRng, VarmaDesign,
};
use fcpca_core::{FcpcaConfig, MtsDataset, Result};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Varma {
        p: usize,
        lengths: LengthMode,
        design: VarmaDesign,
    },
    Eeg {
        channels: usize,
        len: usize,
        design: EegDesign,
    },
    Overlap {
        p: usize,
        len: usize,
        design: OverlapDesign,
    },
}

impl Scenario {
    pub fn varma(p: usize, lengths: LengthMode) -> Self {
        Scenario::Varma {
            p,
            lengths,
            design: VarmaDesign::default(),
        }
    }

    pub fn eeg(channels: usize, len: usize) -> Self {
        Scenario::Eeg {
            channels,
            len,
            design: EegDesign::default(),
        }
    }

    pub fn generate(&self, seed: u64) -> Result<(MtsDataset, ScenarioTruth)> {
        let mut rng = SimRng::seed_from_u64(seed);
        match self {
            Scenario::Varma { p, lengths, design } => varma_scenario_with(*p, *lengths, design, &mut rng),
            Scenario::Eeg { channels, len, design } => eeg_scenario_with(*channels, *len, design, &mut rng),
            Scenario::Overlap { p, len, design } => overlap_scenario(*p, *len, design, &mut rng),
        }
    }

    /// Parameters as JSON, for notes and aggregate files.
    pub fn describe(&self) -> serde_json::Value {
        match self {
            Scenario::Varma { p, lengths, design } => json!({
                "scenario": "varma",
                "p": p,
                "lengths": length_mode_name(*lengths),
                "n_var": design.n_var,
                "n_vma": design.n_vma,
                "n_varma": design.n_varma,
                "ar_radius": design.ar_radius,
                "ma_radius": design.ma_radius,
                "burnin": design.burnin,
            }),
            Scenario::Eeg { channels, len, design } => json!({
                "scenario": "eeg",
                "channels": channels,
                "length": len,
                "sample_rate_hz": design.sample_rate_hz,
                "modulus": design.modulus,
                "dominant_mass": design.dominant_mass,
                "noise_sd": design.noise_sd,
                "group_size": design.group_size,
                "burnin": design.burnin,
                "loadings": match design.loadings {
                    LoadingMode::Shared => "shared",
                    LoadingMode::PerGroup => "per-group",
                },
                "fuzzy_split": match design.fuzzy_split {
                    FuzzySplit::Channels => "channels",
                    FuzzySplit::Time => "time",
                },
            }),
            Scenario::Overlap { p, len, design } => json!({
                "scenario": "overlap",
                "p": p,
                "length": len,
                "per_group": design.per_group,
                "overlap": design.overlap,
                "radius": design.radius,
                "burnin": design.burnin,
            }),
        }
    }
}

pub fn length_mode_name(mode: LengthMode) -> String {
    match mode {
        LengthMode::Fixed(t) => t.to_string(),
        LengthMode::Range { min, max } => format!("{min}..{max}"),
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub m: f64,
    pub ri: f64,
    pub detected: usize,
    pub objective: f64,
    #[serde(with = "crate::summary::float_or_inf")]
    pub cvi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub mean_ri: f64,
    /// Sample standard deviation; 0 for a single run.
    pub sd_ri: f64,
    pub mean_detected: f64,
    /// How often each fuzziness value was used, keyed by its decimal form.
    pub m_counts: BTreeMap<String, usize>,
}

/// Simulates the scenario from `seed`, fits it with `config` reseeded to
/// `seed`, and scores the crisp partition at `threshold`.
pub fn run_once(scenario: &Scenario, config: &FcpcaConfig, threshold: f64, seed: u64) -> Result<RunRecord> {
    let (dataset, truth) = scenario.generate(seed)?;
    let fit = fcpca_fit(&dataset, &config.clone().with_seed(seed))?;
    let score = scenario_score(&fit.run, &truth, threshold)?;
    Ok(RunRecord {
        seed,
        m: fit.run.m,
        ri: score.ri,
        detected: score.detected,
        objective: fit.run.objective,
        cvi: fit.run.cvi,
    })
}

/// Runs seeds `base_seed, base_seed + 1, …` in order, handing each record
/// to `on_record` as soon as it is available.
pub fn replicate<F>(
    scenario: &Scenario,
    config: &FcpcaConfig,
    threshold: f64,
    base_seed: u64,
    runs: usize,
    mut on_record: F,
) -> crate::error::CliResult<Vec<RunRecord>>
where
    F: FnMut(&RunRecord) -> crate::error::CliResult<()>,
{
    let mut out = Vec::with_capacity(runs);
    for j in 0..runs {
        let record = run_once(scenario, config, threshold, base_seed.wrapping_add(j as u64))?;
        on_record(&record)?;
        out.push(record);
    }
    Ok(out)
}

pub fn aggregate(records: &[RunRecord]) -> Aggregate {
    let n = records.len();
    let mean = |f: &dyn Fn(&RunRecord) -> f64| if n == 0 { f64::NAN } else { records.iter().map(f).sum::<f64>() / n as f64 };
    let mean_ri = mean(&|r| r.ri);
    let sd_ri = if n > 1 {
        (records.iter().map(|r| (r.ri - mean_ri).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut m_counts = BTreeMap::new();
    for r in records {
        *m_counts.entry(format!("{}", r.m)).or_insert(0) += 1;
    }
    Aggregate {
        runs: n,
        mean_ri,
        sd_ri,
        mean_detected: mean(&|r| r.detected as f64),
        m_counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ri: f64, detected: usize, m: f64) -> RunRecord {
        RunRecord {
            seed: 0,
            m,
            ri,
            detected,
            objective: 1.0,
            cvi: None,
        }
    }

    #[test]
    fn aggregate_statistics() {
        let a = aggregate(&[record(0.8, 1, 1.4), record(1.0, 2, 1.4), record(0.9, 0, 1.7)]);
        assert_eq!(a.runs, 3);
        assert!((a.mean_ri - 0.9).abs() < 1e-15);
        assert!((a.sd_ri - 0.1).abs() < 1e-15);
        assert_eq!(a.mean_detected, 1.0);
        assert_eq!(a.m_counts["1.4"], 2);
        assert_eq!(a.m_counts["1.7"], 1);
        assert_eq!(aggregate(&[record(0.5, 0, 2.0)]).sd_ri, 0.0);
    }
}
