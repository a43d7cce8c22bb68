//! Optional TOML config file. Keys are the long flag names; a flag given on
//! the command line wins over the file, and the file wins over defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lzqcl::probes::Experiment;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub gap: Option<f64>,
    pub t_ratio: Option<f64>,
    pub half_width: Option<f64>,
    pub resolution: Option<usize>,
    pub nts: Option<usize>,
    pub amplitude: Option<f64>,
    pub seed: Option<u64>,
    pub zero_seed: Option<bool>,
    pub experiment: Option<Experiment>,
    pub t_ratios: Option<Vec<f64>>,
    pub nts_list: Option<Vec<usize>>,
    pub n_seeds: Option<usize>,
    pub master_seed: Option<u64>,
    pub threshold: Option<f64>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub max_iterations: Option<usize>,
    pub grad_tolerance: Option<f64>,
    pub success_delta: Option<f64>,
    pub initial_step: Option<f64>,
    pub backtrack_factor: Option<f64>,
    pub min_step: Option<f64>,
    pub armijo_c: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
    }
}

/// Flag value, else config value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn positive(flag: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        bail!("invalid value '{value}' for '--{flag}': must be a finite number > 0")
    }
}

pub fn at_least(flag: &str, value: usize, min: usize) -> Result<usize> {
    if value >= min {
        Ok(value)
    } else {
        bail!("invalid value '{value}' for '--{flag}': must be at least {min}")
    }
}

pub fn non_empty<T>(flag: &str, values: Vec<T>) -> Result<Vec<T>> {
    if values.is_empty() {
        bail!("invalid value for '--{flag}': needs at least one entry")
    }
    Ok(values)
}

/// Directory used when no output location is given: `LZQCL_OUT_DIR`, or
/// the working directory.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("LZQCL_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}
