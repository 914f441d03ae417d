use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{FcpcaError, Result};

/// Fuzziness exponent: a fixed value, or chosen from a grid by the CVI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fuzziness {
    Fixed(f64),
    Auto,
}

impl Serialize for Fuzziness {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Fuzziness::Fixed(m) => serializer.serialize_f64(*m),
            Fuzziness::Auto => serializer.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for Fuzziness {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct FuzzVisitor;

        impl Visitor<'_> for FuzzVisitor {
            type Value = Fuzziness;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or the string \"auto\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Fuzziness, E> {
                Ok(Fuzziness::Fixed(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Fuzziness, E> {
                Ok(Fuzziness::Fixed(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Fuzziness, E> {
                Ok(Fuzziness::Fixed(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Fuzziness, E> {
                if v == "auto" {
                    Ok(Fuzziness::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(FuzzVisitor)
    }
}

/// `1.1, 1.2, …, 2.2`.
pub fn default_m_grid() -> Vec<f64> {
    (11..=22).map(|i| i as f64 / 10.0).collect()
}

/// Builds `lo, lo+step, …` up to `hi` inclusive (with rounding slack).
pub fn m_grid_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) {
        return Err(FcpcaError::InvalidArgument(format!(
            "bad m grid {lo}:{hi}:{step}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| {
            let v = lo + step * i as f64;
            // Quantize so that 1.1 + 0.1·k prints as the decimal it is.
            (v * 1e10).round() / 1e10
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcpcaConfig {
    pub clusters: usize,
    pub fuzziness: Fuzziness,
    pub lags: usize,
    pub var_ratio: f64,
    pub max_iter: usize,
    /// Relative objective-change tolerance.
    pub tol: f64,
    pub replicates: usize,
    pub seed: u64,
    pub m_grid: Vec<f64>,
    pub zero_error_eps: f64,
    /// Rescale each centered column to unit variance. Off by default.
    #[serde(default)]
    pub standardize: bool,
}

impl Default for FcpcaConfig {
    fn default() -> Self {
        Self {
            clusters: 2,
            fuzziness: Fuzziness::Auto,
            lags: 2,
            var_ratio: 0.95,
            max_iter: 50,
            tol: 1e-6,
            replicates: 3,
            seed: 42,
            m_grid: default_m_grid(),
            zero_error_eps: 1e-12,
            standardize: false,
        }
    }
}

impl FcpcaConfig {
    pub fn with_clusters(mut self, clusters: usize) -> Self {
        self.clusters = clusters;
        self
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.fuzziness = Fuzziness::Fixed(m);
        self
    }

    pub fn with_auto_m(mut self) -> Self {
        self.fuzziness = Fuzziness::Auto;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FcpcaError::InvalidArgument(msg));
        if self.clusters == 0 {
            return bad("cluster count must be at least 1".into());
        }
        match self.fuzziness {
            Fuzziness::Fixed(m) if !(m > 1.0 && m.is_finite()) => {
                return bad(format!("fuzziness must exceed 1, got {m}"));
            }
            Fuzziness::Auto if self.m_grid.is_empty() => {
                return bad("automatic fuzziness needs a non-empty m grid".into());
            }
            _ => {}
        }
        if let Some(m) = self.m_grid.iter().find(|m| !(**m > 1.0 && m.is_finite())) {
            return bad(format!("m grid value {m} must exceed 1"));
        }
        if self.lags == 0 {
            return bad("need at least one lag".into());
        }
        if !(self.var_ratio > 0.0 && self.var_ratio <= 1.0) {
            return bad(format!("variance ratio {} outside (0, 1]", self.var_ratio));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.tol >= 0.0) {
            return bad(format!("tolerance {} must be non-negative", self.tol));
        }
        if !(self.zero_error_eps >= 0.0) {
            return bad("zero_error_eps must be non-negative".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = default_m_grid();
        assert_eq!(g.len(), 12);
        assert_eq!(g[0], 1.1);
        assert_eq!(g[11], 2.2);
        assert_eq!(m_grid_range(1.1, 2.2, 0.1).unwrap(), g);
        assert!(m_grid_range(2.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn validation() {
        assert!(FcpcaConfig::default().validate().is_ok());
        assert!(FcpcaConfig::default().with_m(1.0).validate().is_err());
        assert!(FcpcaConfig::default().with_clusters(0).validate().is_err());
        let mut c = FcpcaConfig::default();
        c.m_grid = vec![0.9];
        assert!(c.validate().is_err());
        c = FcpcaConfig::default();
        c.var_ratio = 0.0;
        assert!(c.validate().is_err());
    }
}
