use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Equality of real/complex values (eigenvalues, levels).
    pub eps_eq: f64,
    /// Residual allowed when verifying a collision root.
    pub eps_root: f64,
    /// Largest principal angle for two flags to count as equal.
    pub eps_flag: f64,
    /// Surface-relation residual for filtered local systems.
    pub eps_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_eq: 1e-9,
            eps_root: 1e-10,
            eps_flag: 1e-8,
            eps_rel: 1e-9,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("tolerance `{0}` must be a positive finite number")]
    BadTolerance(&'static str),
    #[error("grid_resolution must be at least 2, got {0}")]
    BadResolution(usize),
    #[error("window_anchor must be finite")]
    BadAnchor,
}

/// Run configuration: tolerances, the level-window anchor, grid resolution
/// for scans and the seed for randomized suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    #[serde(flatten)]
    pub tol: Tolerances,
    pub window_anchor: f64,
    pub grid_resolution: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            window_anchor: 0.0,
            grid_resolution: 400,
            seed: 0x5eed,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.tol;
        for (name, v) in [
            ("eps_eq", t.eps_eq),
            ("eps_root", t.eps_root),
            ("eps_flag", t.eps_flag),
            ("eps_rel", t.eps_rel),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::BadTolerance(name));
            }
        }
        if self.grid_resolution < 2 {
            return Err(ConfigError::BadResolution(self.grid_resolution));
        }
        if !self.window_anchor.is_finite() {
            return Err(ConfigError::BadAnchor);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert_eq!(Config::default().validate(), Ok(()));
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = Config::default();
        c.tol.eps_flag = 0.0;
        assert_eq!(c.validate(), Err(ConfigError::BadTolerance("eps_flag")));
        let c = Config {
            grid_resolution: 1,
            ..Config::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::BadResolution(1)));
    }

    #[test]
    fn partial_json_keeps_defaults() {
        let c: Config = serde_json::from_str(r#"{"eps_eq": 1e-7, "seed": 3}"#).unwrap();
        assert_eq!(c.tol.eps_eq, 1e-7);
        assert_eq!(c.tol.eps_root, 1e-10);
        assert_eq!(c.seed, 3);
        assert_eq!(c.grid_resolution, 400);
    }
}
