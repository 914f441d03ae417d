//! JSON records written next to each result.

use fcpca_core::clustering::{FcpcaFit, HardRun};
use fcpca_core::FcpcaConfig;
use serde::{Deserialize, Serialize};

/// JSON has no infinity: `None` is `null`, `+∞` is the string `"inf"`.
pub mod float_or_inf {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if *x == f64::INFINITY => s.serialize_str("inf"),
            Some(x) => s.serialize_f64(*x),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Option<f64>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, \"inf\" or null")
            }

            fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(None)
            }

            fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
                Ok(None)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                Ok(Some(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                Ok(Some(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                Ok(Some(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                match v {
                    "inf" => Ok(Some(f64::INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// CSV cell for an optional CVI: empty, `inf` or the shortest round-trip
/// decimal.
pub fn cvi_cell(cvi: Option<f64>) -> String {
    match cvi {
        None => String::new(),
        Some(x) if x == f64::INFINITY => "inf".into(),
        Some(x) => x.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub m: f64,
    pub replicate: usize,
    pub seed: u64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub m: f64,
    pub objective: f64,
    #[serde(with = "float_or_inf")]
    pub cvi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub input: String,
    pub objective: f64,
    #[serde(with = "float_or_inf")]
    pub cvi: Option<f64>,
    pub selected_m: f64,
    pub clusters: usize,
    pub k_per_lag: Vec<usize>,
    pub threshold: f64,
    pub mixed_count: usize,
    pub iterations: Vec<ReplicateRecord>,
    pub m_search: Vec<GridRecord>,
    pub converged: bool,
    pub stopped_on_increase: bool,
    pub reinitializations: usize,
    /// Seed of the replicate that produced the reported run.
    pub seed_used: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
    pub config: FcpcaConfig,
}

impl RunSummary {
    pub fn from_fit(input: &str, fit: &FcpcaFit, threshold: f64, mixed_count: usize, config: &FcpcaConfig) -> Self {
        let run = &fit.run;
        Self {
            input: input.into(),
            objective: run.objective,
            cvi: run.cvi,
            selected_m: run.m,
            clusters: run.clusters,
            k_per_lag: run.k_per_lag.clone(),
            threshold,
            mixed_count,
            iterations: fit
                .replicates
                .iter()
                .map(|r| ReplicateRecord {
                    m: r.m,
                    replicate: r.replicate,
                    seed: r.seed,
                    objective: r.objective,
                    iterations: r.iterations,
                    converged: r.converged,
                })
                .collect(),
            m_search: fit
                .m_search
                .iter()
                .map(|g| GridRecord {
                    m: g.m,
                    objective: g.objective,
                    cvi: g.cvi,
                })
                .collect(),
            converged: run.converged,
            stopped_on_increase: run.stopped_on_increase,
            reinitializations: run.reinitializations,
            seed_used: run.seed_used,
            seed: config.seed,
            wall_time_secs: None,
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardSummary {
    pub input: String,
    pub overall_error: f64,
    pub clusters: usize,
    pub k_per_lag: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub reseeds: usize,
    pub seed_used: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
    pub config: FcpcaConfig,
}

impl HardSummary {
    pub fn from_run(input: &str, run: &HardRun, config: &FcpcaConfig) -> Self {
        Self {
            input: input.into(),
            overall_error: run.overall_error,
            clusters: run.bases.len(),
            k_per_lag: run.bases.first().map(|lags| lags.iter().map(|b| b.k).collect()).unwrap_or_default(),
            iterations: run.iterations,
            converged: run.converged,
            reseeds: run.reseeds,
            seed_used: run.seed_used,
            seed: config.seed,
            wall_time_secs: None,
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub rand_index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzzy_detected: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzzy_total: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_cvi_round_trips() {
        for cvi in [None, Some(f64::INFINITY), Some(0.123456789012345)] {
            let g = GridRecord { m: 1.5, objective: 2.0, cvi };
            let text = serde_json::to_string(&g).unwrap();
            assert_eq!(serde_json::from_str::<GridRecord>(&text).unwrap(), g);
        }
        let text = serde_json::to_string(&GridRecord { m: 1.5, objective: 2.0, cvi: Some(f64::INFINITY) }).unwrap();
        assert!(text.contains("\"inf\""));
        assert_eq!(cvi_cell(None), "");
        assert_eq!(cvi_cell(Some(f64::INFINITY)), "inf");
    }
}
