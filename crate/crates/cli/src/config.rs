use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid grid '{0}': expected start:stop:step with step > 0")]
    Grid(String),
    #[error("{0}")]
    Invalid(String),
}

/// Values from an optional TOML file. Command-line flags take precedence.
#[derive(Clone, Debug, Default, Deserialize, serde::Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: Option<String>,
    pub label: Option<String>,
    pub k: Option<i64>,
    pub cutoff: Option<usize>,
    pub grid: Option<String>,
    pub points: Option<usize>,
    pub tol: Option<f64>,
    pub m: Option<i64>,
    pub mu0: Option<i64>,
    pub width: Option<usize>,
    pub dim: Option<usize>,
    pub orientation: Option<i8>,
    pub seed: Option<u64>,
    pub suite: Option<String>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Ok(toml::from_str(&text)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError::Grid(s.to_string());
        let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(bad());
        }
        Ok(Grid { start, stop, step })
    }

    pub fn samples(&self) -> Vec<f64> {
        dirac_core::diracfam::ScanSpec::range(self.start, self.stop, self.step)
    }
}

pub fn positive_tol(tol: f64) -> Result<f64, ConfigError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(ConfigError::Invalid(format!("tolerance must be positive, got {tol}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(Grid::parse("0:1:0.5").unwrap().samples(), vec![0.0, 0.5, 1.0]);
        assert!(Grid::parse("0:1:0").is_err());
        assert!(Grid::parse("1:0:0.1").is_err());
        assert!(Grid::parse("0:1").is_err());
    }

    #[test]
    fn toml_fields() {
        let c: ExperimentConfig = toml::from_str("group = \"SU2\"\nlabel = \"1/2\"\ntol = 1e-8\n").unwrap();
        assert_eq!(c.group.as_deref(), Some("SU2"));
        assert!(toml::from_str::<ExperimentConfig>("colour = 1").is_err());
        assert!(positive_tol(0.0).is_err());
    }
}
