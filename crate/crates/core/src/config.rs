//! Optional TOML configuration file.
//!
//! Looked up from `--config`, then `$GASC_CONFIG`. Command-line flags win
//! over the file, and the file wins over built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::runner::{RunConfig, TimingMode};

pub const CONFIG_ENV: &str = "GASC_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Every field is optional; absent ones fall through to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub wall_limit_s: Option<f64>,
    pub cpu_limit_s: Option<f64>,
    pub mem_limit_mib: Option<u64>,
    pub workers: Option<usize>,
    pub timing_mode: Option<TimingMode>,
    pub repetitions: Option<u32>,
    pub grace_kill_s: Option<f64>,
    pub adapters: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSection {
    pub bind: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub service: ServiceSection,
}

impl GlobalConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text, path)
    }

    /// `explicit` first, then `$GASC_CONFIG`; no file means all defaults.
    pub fn discover(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from)) {
            Some(p) => Self::load_file(&p),
            None => Ok(Self::default()),
        }
    }

    /// Built-in defaults overlaid with the file's `[run]` values.
    pub fn run_config(&self) -> RunConfig {
        let d = RunConfig::default();
        let r = &self.run;
        RunConfig {
            wall_limit_s: r.wall_limit_s.unwrap_or(d.wall_limit_s),
            cpu_limit_s: r.cpu_limit_s.unwrap_or(d.cpu_limit_s),
            mem_limit_mib: r.mem_limit_mib.unwrap_or(d.mem_limit_mib),
            workers: r.workers.unwrap_or(d.workers),
            timing_mode: r.timing_mode.unwrap_or(d.timing_mode),
            repetitions: r.repetitions.unwrap_or(d.repetitions),
            grace_kill_s: r.grace_kill_s.unwrap_or(d.grace_kill_s),
        }
    }
}
