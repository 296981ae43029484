//! Tolerance and sampling configuration: defaults, config file, environment
//! overrides, then command-line flags, in that order.

use cohjump::oracle::SampleSpec;
use cohjump::Tolerances;
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "COHJUMP_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub rank_tol: f64,
    pub hodge_tol: f64,
    pub obstruction_tol: f64,
    /// Default truncation order for commands that take `--order`.
    pub default_order: usize,
    /// Rank tolerance of the sampling oracle, deliberately configured apart
    /// from the Hodge-side thresholds.
    pub oracle_rank_tol: f64,
    pub oracle_samples: usize,
    pub oracle_min_modulus: f64,
    pub oracle_max_modulus: f64,
    pub oracle_seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let tol = Tolerances::default();
        let spec = SampleSpec::default();
        Self {
            rank_tol: tol.rank_tol,
            hodge_tol: tol.hodge_tol,
            obstruction_tol: tol.obstruction_tol,
            default_order: 6,
            oracle_rank_tol: 1e-8,
            oracle_samples: spec.count,
            oracle_min_modulus: spec.min_modulus,
            oracle_max_modulus: spec.max_modulus,
            oracle_seed: spec.seed,
        }
    }
}

/// Partial configuration as read from a file; omitted fields keep their
/// current values.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConfigPatch {
    pub rank_tol: Option<f64>,
    pub hodge_tol: Option<f64>,
    pub obstruction_tol: Option<f64>,
    pub default_order: Option<usize>,
    pub oracle_rank_tol: Option<f64>,
    pub oracle_samples: Option<usize>,
    pub oracle_min_modulus: Option<f64>,
    pub oracle_max_modulus: Option<f64>,
    pub oracle_seed: Option<u64>,
}

impl Config {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rank_tol: self.rank_tol,
            hodge_tol: self.hodge_tol,
            obstruction_tol: self.obstruction_tol,
        }
    }

    pub fn sample_spec(&self) -> SampleSpec {
        SampleSpec {
            count: self.oracle_samples,
            min_modulus: self.oracle_min_modulus,
            max_modulus: self.oracle_max_modulus,
            seed: self.oracle_seed,
        }
    }

    pub fn apply(&mut self, patch: &ConfigPatch) {
        if let Some(v) = patch.rank_tol {
            self.rank_tol = v;
        }
        if let Some(v) = patch.hodge_tol {
            self.hodge_tol = v;
        }
        if let Some(v) = patch.obstruction_tol {
            self.obstruction_tol = v;
        }
        if let Some(v) = patch.default_order {
            self.default_order = v;
        }
        if let Some(v) = patch.oracle_rank_tol {
            self.oracle_rank_tol = v;
        }
        if let Some(v) = patch.oracle_samples {
            self.oracle_samples = v;
        }
        if let Some(v) = patch.oracle_min_modulus {
            self.oracle_min_modulus = v;
        }
        if let Some(v) = patch.oracle_max_modulus {
            self.oracle_max_modulus = v;
        }
        if let Some(v) = patch.oracle_seed {
            self.oracle_seed = v;
        }
    }

    /// Read overrides from `COHJUMP_*` environment variables.
    pub fn env_patch() -> Result<ConfigPatch, String> {
        fn parse<T: std::str::FromStr>(name: &str) -> Result<Option<T>, String>
        where
            T::Err: std::fmt::Display,
        {
            match std::env::var(name) {
                Ok(s) => s
                    .parse::<T>()
                    .map(Some)
                    .map_err(|e| format!("invalid {name}: {e}")),
                Err(_) => Ok(None),
            }
        }
        Ok(ConfigPatch {
            rank_tol: parse(&format!("{ENV_PREFIX}RANK_TOL"))?,
            hodge_tol: parse(&format!("{ENV_PREFIX}HODGE_TOL"))?,
            obstruction_tol: parse(&format!("{ENV_PREFIX}OBSTRUCTION_TOL"))?,
            default_order: parse(&format!("{ENV_PREFIX}ORDER"))?,
            oracle_rank_tol: parse(&format!("{ENV_PREFIX}ORACLE_RANK_TOL"))?,
            oracle_samples: parse(&format!("{ENV_PREFIX}ORACLE_SAMPLES"))?,
            oracle_min_modulus: parse(&format!("{ENV_PREFIX}ORACLE_MIN_MODULUS"))?,
            oracle_max_modulus: parse(&format!("{ENV_PREFIX}ORACLE_MAX_MODULUS"))?,
            oracle_seed: parse(&format!("{ENV_PREFIX}ORACLE_SEED"))?,
        })
    }

    pub fn from_file(path: &str) -> Result<ConfigPatch, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {path}: {e}"))
    }

    /// All tolerances must sit strictly inside (0, 1); orders and sample
    /// counts must be at least 1.
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("rank_tol", self.rank_tol),
            ("hodge_tol", self.hodge_tol),
            ("obstruction_tol", self.obstruction_tol),
            ("oracle_rank_tol", self.oracle_rank_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if self.default_order < 1 {
            return Err("default_order must be at least 1".into());
        }
        if self.oracle_samples < 1 {
            return Err("oracle_samples must be at least 1".into());
        }
        if !(self.oracle_min_modulus > 0.0 && self.oracle_min_modulus <= self.oracle_max_modulus) {
            return Err("oracle moduli must satisfy 0 < min <= max".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn patch_overrides_selected_fields() {
        let mut config = Config::default();
        config.apply(&ConfigPatch {
            rank_tol: Some(1e-12),
            oracle_samples: Some(16),
            ..Default::default()
        });
        assert_eq!(config.rank_tol, 1e-12);
        assert_eq!(config.oracle_samples, 16);
        assert_eq!(config.hodge_tol, Config::default().hodge_tol);
    }

    #[test]
    fn out_of_range_tolerance_is_rejected() {
        let mut config = Config::default();
        config.rank_tol = 2.0;
        assert!(config.validate().is_err());
    }
}
