//! Layered run configuration: built-in defaults, then the TOML config file,
//! then environment variables, then command-line flags. Later layers win.
//!
//! The file is plain TOML with one `[section]` per subcommand plus three
//! top-level keys (`seed`, `out`, `threads`). Every key in the file has a
//! long-form flag of the same name on the matching subcommand.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// Top-level shape of the config file. All fields optional; absent values
/// fall through to flags or defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub exp1: Exp1File,
    #[serde(default)]
    pub exp2: Exp2File,
    #[serde(default)]
    pub exp3: Exp3File,
    #[serde(default)]
    pub exp4: Exp4File,
    #[serde(default)]
    pub criteria: CriteriaFile,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp1File {
    pub y: Option<f64>,
    pub sigma_like: Option<f64>,
    pub mu0: Option<f64>,
    pub sigma0: Option<Vec<f64>>,
    pub theta_points: Option<usize>,
    pub theta_halfwidth: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp2File {
    pub d_y: Option<usize>,
    pub beta0_true: Option<f64>,
    pub beta1_true: Option<f64>,
    pub sigma_like: Option<f64>,
    pub x_scale: Option<f64>,
    pub sigma0_sweep: Option<Vec<f64>>,
    pub sigma1_sweep: Option<Vec<f64>>,
    pub sigma_shared: Option<Vec<f64>>,
    pub r2_samples: Option<usize>,
    pub n_runs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp3File {
    pub theta_true: Option<f64>,
    pub l_values: Option<Vec<f64>>,
    pub d_y_table: Option<Vec<usize>>,
    pub n_runs: Option<usize>,
    pub dy_curve: Option<Vec<usize>>,
    pub l_fixed: Option<f64>,
    pub ibf_dy: Option<Vec<usize>>,
    pub ibf_theta: Option<Vec<f64>>,
    pub ibf_phi: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp4File {
    pub d_y: Option<usize>,
    pub t_max: Option<f64>,
    pub sigma_e2: Option<f64>,
    pub v0_true: Option<f64>,
    pub k: Option<f64>,
    pub omega: Option<f64>,
    pub ecc: Option<f64>,
    pub period: Option<f64>,
    pub tau: Option<f64>,
    pub v0_lo: Option<f64>,
    pub v0_hi: Option<f64>,
    pub pmax_values: Option<Vec<f64>>,
    pub curve_pmax: Option<f64>,
    pub hyper_lo: Option<f64>,
    pub hyper_hi: Option<f64>,
    pub hyper_nodes: Option<usize>,
    pub v0_points: Option<usize>,
    pub p_spacing: Option<f64>,
    pub p_points_min: Option<usize>,
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaFile {
    pub sigma0: Option<Vec<f64>>,
    pub d_y: Option<usize>,
    pub theta_true: Option<f64>,
    pub data_seed: Option<u64>,
}

/// Pick the first present value: flag, then file, then the built-in default.
pub fn layer<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Like [`layer`] but with no default: stochastic experiments must receive
/// a seed explicitly, never from the wall clock.
pub fn require_seed(flag: Option<u64>, file: Option<u64>, command: &str) -> Result<u64> {
    match flag.or(file) {
        Some(s) => Ok(s),
        None => bail!(
            "{command} is stochastic and needs an explicit seed: pass --seed N, \
             set MARGLIK_SEED, or put `seed = N` in the config file"
        ),
    }
}
