//! Seeded synthetic scenario generators with ground-truth partitions.

mod eeg;
mod varma;

pub use eeg::{ar2_band_coeffs, eeg_scenario, eeg_scenario_with, Ar2Band, EegBand, EegDesign, FuzzySplit, LoadingMode};
pub use varma::{
    overlap_scenario, random_stable_matrix, simulate_varma, spectral_radius, varma_scenario, varma_scenario_with,
    LengthMode, OverlapDesign, VarmaDesign, VarmaSpec, DEFAULT_BURNIN,
};

use crate::eval::Partition;

/// RNG used by every generator.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Ground truth of a generated scenario. Designed-fuzzy series carry the
/// label `"fuzzy"` and are listed in `fuzzy_indices`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioTruth {
    pub labels: Vec<String>,
    pub fuzzy_indices: Vec<usize>,
}

impl ScenarioTruth {
    pub const FUZZY: &'static str = "fuzzy";

    pub fn partition(&self) -> Partition {
        Partition::new(self.labels.iter())
    }

    pub fn group_indices(&self, label: &str) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| *l == label)
            .map(|(i, _)| i)
            .collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for item `index` under `base`: `splitmix64(base ^ splitmix64(index))`.
/// Lets series be generated in any order or concurrently.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}
