//! Sectioned `key = value` configuration files.
//!
//! The format is deliberately minimal so any language can parse it:
//! `[section]` headers group flat `key = value` lines, `#` starts a
//! comment, and list values separate entries with commas.
//!
//! ```text
//! [model]
//! n = 350
//! d = 6
//! l = 3
//!
//! [experiment]
//! sigma = 0, 0.1, 0.25
//! p = 1, 3
//! stop = ratio
//! ```

use ssc_core::gomp::StopPolicy;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line}: expected `key = value` or `[section]`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("config line {line}: key `{key}` appears twice in [{section}]")]
    Duplicate {
        line: usize,
        section: String,
        key: String,
    },
    #[error("config is missing key `{key}` in section [{section}]")]
    Missing { section: String, key: String },
    #[error("config key `{key}` in [{section}]: cannot parse `{value}` as {wanted}")]
    BadValue {
        section: String,
        key: String,
        value: String,
        wanted: &'static str,
    },
    #[error("config key `{key}` in [{section}]: {message}")]
    BadDomain {
        section: String,
        key: String,
        message: String,
    },
    #[error("unknown stop mode `{0}`; use `ratio` or `fixed:<M>`")]
    BadStopMode(String),
}

/// Parsed but untyped configuration: sections of string key/value pairs.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = match raw_line.split_once('#') {
                Some((before, _)) => before.trim(),
                None => raw_line.trim(),
            };
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Malformed {
                    line,
                    text: content.to_string(),
                })?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line,
                text: content.to_string(),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Malformed {
                    line,
                    text: content.to_string(),
                });
            }
            let section = sections.entry(current.clone()).or_default();
            if section.insert(key.clone(), value).is_some() {
                return Err(ConfigError::Duplicate {
                    line,
                    section: current.clone(),
                    key,
                });
            }
        }
        Ok(Self { sections })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// Typed lookup; absent keys return `Ok(None)`.
    pub fn get_parsed<T>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
    {
        match self.get(section, key) {
            None => Ok(None),
            Some(text) => text.parse::<T>().map(Some).map_err(|_| ConfigError::BadValue {
                section: section.to_string(),
                key: key.to_string(),
                value: text.to_string(),
                wanted: std::any::type_name::<T>(),
            }),
        }
    }

    pub fn require_parsed<T>(&self, section: &str, key: &str) -> Result<T, ConfigError>
    where
        T: FromStr,
    {
        self.get_parsed(section, key)?.ok_or_else(|| ConfigError::Missing {
            section: section.to_string(),
            key: key.to_string(),
        })
    }

    /// Typed lookup with a default for absent keys.
    pub fn get_or<T>(&self, section: &str, key: &str, default: T) -> Result<T, ConfigError>
    where
        T: FromStr,
    {
        Ok(self.get_parsed(section, key)?.unwrap_or(default))
    }

    /// Comma-separated list lookup; absent keys return `Ok(None)`.
    pub fn list_parsed<T>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T: FromStr,
    {
        let Some(text) = self.get(section, key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for item in text.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            out.push(item.parse::<T>().map_err(|_| ConfigError::BadValue {
                section: section.to_string(),
                key: key.to_string(),
                value: item.to_string(),
                wanted: std::any::type_name::<T>(),
            })?);
        }
        if out.is_empty() {
            return Err(ConfigError::BadValue {
                section: section.to_string(),
                key: key.to_string(),
                value: text.to_string(),
                wanted: "nonempty list",
            });
        }
        Ok(Some(out))
    }

    pub fn list_or<T>(
        &self,
        section: &str,
        key: &str,
        default: Vec<T>,
    ) -> Result<Vec<T>, ConfigError>
    where
        T: FromStr,
    {
        Ok(self.list_parsed(section, key)?.unwrap_or(default))
    }
}

/// Stopping-rule selector shared by flags and config files:
/// `ratio` or `fixed:<M>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopSpec {
    Ratio,
    Fixed(usize),
}

impl StopSpec {
    pub fn policy(&self, p: usize) -> StopPolicy {
        match *self {
            StopSpec::Ratio => StopPolicy::ratio(p),
            StopSpec::Fixed(m) => StopPolicy::fixed(m, p),
        }
    }
}

impl FromStr for StopSpec {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "ratio" {
            return Ok(StopSpec::Ratio);
        }
        if let Some(m) = s.strip_prefix("fixed:") {
            let m: usize = m
                .trim()
                .parse()
                .map_err(|_| ConfigError::BadStopMode(s.to_string()))?;
            if m == 0 {
                return Err(ConfigError::BadStopMode(s.to_string()));
            }
            return Ok(StopSpec::Fixed(m));
        }
        Err(ConfigError::BadStopMode(s.to_string()))
    }
}

impl Display for StopSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopSpec::Ratio => write!(f, "ratio"),
            StopSpec::Fixed(m) => write!(f, "fixed:{m}"),
        }
    }
}

/// `[model]` section: the union-of-subspaces shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub ambient: usize,
    pub dim: usize,
    pub clusters: usize,
    pub rho: f64,
}

impl ModelConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let cfg = Self {
            ambient: raw.require_parsed("model", "n")?,
            dim: raw.require_parsed("model", "d")?,
            clusters: raw.require_parsed("model", "l")?,
            rho: raw.get_or("model", "rho", 0.0)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(ConfigError::BadDomain {
                section: "model".into(),
                key: "rho".into(),
                message: format!("affinity must lie in [0, 1], got {}", self.rho),
            });
        }
        Ok(())
    }
}

/// Turn a sampling density φ into a per-cluster point count, requiring
/// φ·d to be integral.
pub fn points_per_cluster(phi: f64, dim: usize) -> Result<usize, ConfigError> {
    let exact = phi * dim as f64;
    let rounded = exact.round();
    if phi <= 0.0 || !exact.is_finite() || (exact - rounded).abs() > 1e-9 {
        return Err(ConfigError::BadDomain {
            section: "experiment".into(),
            key: "phi".into(),
            message: format!("phi·d must be a positive integer, got phi = {phi}, d = {dim}"),
        });
    }
    Ok(rounded as usize)
}

/// `[experiment]` grid for the sweep command.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub ambient: usize,
    pub dim: usize,
    pub clusters: usize,
    pub rho_list: Vec<f64>,
    pub phi_list: Vec<f64>,
    pub sigma_list: Vec<f64>,
    pub p_list: Vec<usize>,
    pub stop: StopSpec,
    pub trials: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl SweepConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let model = ModelConfig::from_raw(raw)?;
        let cfg = Self {
            ambient: model.ambient,
            dim: model.dim,
            clusters: model.clusters,
            rho_list: raw.list_or("experiment", "rho", vec![model.rho])?,
            phi_list: raw.list_or("experiment", "phi", vec![8.0])?,
            sigma_list: raw.list_or("experiment", "sigma", vec![0.0])?,
            p_list: raw.list_or("experiment", "p", vec![1, 3])?,
            stop: raw.get_or("experiment", "stop", StopSpec::Ratio)?,
            trials: raw.get_or("experiment", "trials", 20)?,
            restarts: raw.get_or("experiment", "restarts", 10)?,
            seed: raw.get_or("experiment", "seed", 0)?,
        };
        if cfg.trials == 0 {
            return Err(ConfigError::BadDomain {
                section: "experiment".into(),
                key: "trials".into(),
                message: "need at least one trial".into(),
            });
        }
        for &p in &cfg.p_list {
            if p == 0 {
                return Err(ConfigError::BadDomain {
                    section: "experiment".into(),
                    key: "p".into(),
                    message: "batch sizes must be positive".into(),
                });
            }
        }
        for &rho in &cfg.rho_list {
            if !(0.0..=1.0).contains(&rho) {
                return Err(ConfigError::BadDomain {
                    section: "experiment".into(),
                    key: "rho".into(),
                    message: format!("affinity must lie in [0, 1], got {rho}"),
                });
            }
        }
        Ok(cfg)
    }
}

/// `[bounds]` section: the grid for the bound calculators.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsConfig {
    pub ambient: usize,
    pub data_size: usize,
    pub cluster_size: usize,
    pub dim: usize,
    pub sigma_list: Vec<f64>,
    pub tau_list: Vec<f64>,
    pub p_list: Vec<usize>,
    pub iterations: usize,
    pub c_const: f64,
    /// Total true-neighbor target; `None` means full recovery `p·M`.
    pub k_total: Option<usize>,
    /// Per-iteration count for the two comparison forms.
    pub k_comp: Option<usize>,
    pub affinities: Option<Vec<f64>>,
}

impl BoundsConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        Ok(Self {
            ambient: raw.require_parsed("bounds", "n")?,
            data_size: raw.require_parsed("bounds", "data_size")?,
            cluster_size: raw.require_parsed("bounds", "cluster_size")?,
            dim: raw.require_parsed("bounds", "d")?,
            sigma_list: raw.list_or("bounds", "sigma", vec![0.0])?,
            tau_list: raw.list_or("bounds", "tau", vec![0.5])?,
            p_list: raw.list_or("bounds", "p", vec![1, 3])?,
            iterations: raw.require_parsed("bounds", "iterations")?,
            c_const: raw.get_or("bounds", "c", 1.0)?,
            k_total: raw.get_parsed("bounds", "k_total")?,
            k_comp: raw.get_parsed("bounds", "k_comp")?,
            affinities: raw.list_parsed("bounds", "affinities")?,
        })
    }
}
