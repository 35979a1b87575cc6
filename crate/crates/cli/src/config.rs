//! Run configuration: defaults, optional TOML config file, command-line
//! overrides. Flags win over the config file, which wins over defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vscreen_core::{Error, Result};

/// Flat key-value config file. Every key is optional; command-line flags
/// override whatever is set here.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub scorers: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub alpha: Option<f64>,
    pub ef_percents: Option<Vec<f64>>,
    pub schemes: Option<Vec<String>>,
    pub pathway: Option<String>,
    pub scheme_files: Option<Vec<PathBuf>>,
    pub subsample: Option<f64>,
    pub metrics_threshold: Option<f64>,
    pub model: Option<String>,
    pub recipe: Option<PathBuf>,
    pub threshold: Option<f64>,
    pub train_fraction: Option<f64>,
    pub baseline: Option<String>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub layer_widths: Option<Vec<usize>>,
    pub dropout: Option<Vec<f64>>,
    pub batch_norm: Option<bool>,
    pub synth_spec: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }
}

/// Fully resolved settings for one run; echoed into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub input: Option<PathBuf>,
    pub scorers: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub alpha: f64,
    pub ef_percents: Vec<f64>,
    pub schemes: Vec<String>,
    pub pathway: String,
    pub scheme_files: Vec<PathBuf>,
    pub subsample: Option<f64>,
    pub metrics_threshold: Option<f64>,
    pub model: String,
    pub recipe: Option<PathBuf>,
    pub threshold: f64,
    pub train_fraction: f64,
    pub baseline: String,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub layer_widths: Option<Vec<usize>>,
    pub dropout: Option<Vec<f64>>,
    pub batch_norm: Option<bool>,
    pub synth_spec: Option<PathBuf>,
}

impl Resolved {
    pub fn validate(&self) -> Result<()> {
        if self.alpha <= 0.0 {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.ef_percents.len() != 2 {
            return Err(Error::Config(format!(
                "ef_percents needs exactly two entries, got {}",
                self.ef_percents.len()
            )));
        }
        for &p in &self.ef_percents {
            if !(p > 0.0 && p <= 100.0) {
                return Err(Error::Config(format!("EF percentage {p} outside (0, 100]")));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if let Some(f) = self.subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("subsample fraction {f} outside (0, 1]")));
            }
        }
        for path in [&self.input, &self.scorers, &self.recipe, &self.synth_spec]
            .into_iter()
            .flatten()
        {
            if !path.exists() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("input file not found: {}", path.display()),
                )));
            }
        }
        for path in &self.scheme_files {
            if !path.exists() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("consensus spec not found: {}", path.display()),
                )));
            }
        }
        Ok(())
    }
}
