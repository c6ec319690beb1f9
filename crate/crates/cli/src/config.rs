//! JSON run configuration. Every field is optional and command-line flags
//! take precedence.
//!
//! ```json
//! {
//!   "panel": "data/sample/panel.csv",
//!   "meta": "data/sample/meta.json",
//!   "model": "model",
//!   "out": "out",
//!   "problem": "data/sample/grid.json",
//!   "threads": 4,
//!   "fit": { "reference_year": 2001, "night_threshold": 0.0 },
//!   "clustering": { "n_clusters": 4, "seed": 0, "max_iter": 100 },
//!   "generation": { "count": 10, "seed": 42 },
//!   "convergence": { "rse": 0.05, "min_years": 30, "max_years": 1000 },
//!   "diagnostics": { "alpha": 0.05, "max_lag": 48, "window": 100 }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use spectral_weather::FitConfig;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub panel: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub problem: Option<PathBuf>,
    pub weather: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub generation: GenerationConfig,
    #[serde(default)]
    pub convergence: LoopConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusteringConfig {
    pub n_clusters: Option<usize>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    pub count: Option<usize>,
    pub rse: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    pub rse: Option<f64>,
    pub min_years: Option<usize>,
    pub max_years: Option<usize>,
    pub seed: Option<u64>,
    pub batch_size: Option<usize>,
    pub horizon: Option<usize>,
    #[serde(default)]
    pub metrics: Vec<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub alpha: Option<f64>,
    pub max_lag: Option<usize>,
    pub window: Option<usize>,
    pub n_worst: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag value, else config value, else an error naming the flag.
pub fn require<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T> {
    flag.or(config)
        .ok_or_else(|| anyhow::anyhow!("missing --{name} (flag or config)"))
}

pub fn existing(path: PathBuf, what: &str) -> Result<PathBuf> {
    anyhow::ensure!(path.exists(), "{what} {} does not exist", path.display());
    Ok(path)
}
