//! Optional TOML run configuration. Every key is optional and flat; command
//! line flags take precedence over file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    // paths
    pub documents: Option<PathBuf>,
    pub interactions: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub vocabulary: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub compare: Option<PathBuf>,

    // training
    pub variant: Option<String>,
    pub h_factors: Option<usize>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub max_inner_iters: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub init: Option<String>,
    pub init_scale: Option<f64>,
    pub grid_h: Option<Vec<usize>>,
    pub grid_c1: Option<Vec<f64>>,
    pub grid_c2: Option<Vec<f64>>,
    pub grid_c3: Option<Vec<f64>>,

    // ingestion
    pub min_df: Option<usize>,
    pub train_ratio: Option<f64>,
    pub validation_ratio: Option<f64>,
    pub test_ratio: Option<f64>,
    pub bias: Option<bool>,
    pub no_stem: Option<bool>,
    pub keep_stop_words: Option<bool>,

    // inspection
    pub top_n: Option<usize>,
    pub top_items: Option<usize>,

    // synthetic data
    pub users: Option<usize>,
    pub features: Option<usize>,
    pub h_true: Option<usize>,
    pub examples_per_user: Option<usize>,
    pub held_out: Option<usize>,
    pub factor_scale: Option<f64>,
    pub lambda_scale: Option<f64>,
    pub profile_noise: Option<f64>,
    pub feature_density: Option<f64>,
    pub prior: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag value, else config value, else error naming the flag.
pub fn required<T: Clone>(flag: &Option<T>, file: &Option<T>, name: &str) -> Result<T, CliError> {
    flag.clone()
        .or_else(|| file.clone())
        .ok_or_else(|| CliError::Usage(format!("missing --{name} (flag or config key)")))
}

pub fn or_default<T: Clone>(flag: &Option<T>, file: &Option<T>, default: T) -> T {
    flag.clone().or_else(|| file.clone()).unwrap_or(default)
}
