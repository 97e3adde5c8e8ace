//! Run configuration: strict JSON file, command-line overrides, defaults.
//!
//! Precedence is flags > file > defaults. Flags are folded into the `params`
//! object before it is deserialized, so a single strict parse validates both.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt;
use std::path::{Path, PathBuf};

use ttrap_core::fom::PlatformRecord;

pub const FORMAT_VERSION: &str = "1";
pub const DEFAULT_OUTPUT_DIR: &str = "ttrap-out";

/// A configuration problem; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Eigenmodes,
    Rabi,
    Upi,
    CzSweep,
    GaussianSweep,
    Fom,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Eigenmodes => "eigenmodes",
            Experiment::Rabi => "rabi",
            Experiment::Upi => "upi",
            Experiment::CzSweep => "cz-sweep",
            Experiment::GaussianSweep => "gaussian-sweep",
            Experiment::Fom => "fom",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    format_version: String,
    experiment: Experiment,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    params: Option<Map<String, Value>>,
}

/// The config file after top-level validation; `params` is still untyped.
#[derive(Debug)]
pub struct FileConfig {
    pub path: PathBuf,
    pub text: String,
    pub experiment: Experiment,
    pub output_dir: Option<PathBuf>,
    pub params: Map<String, Value>,
}

pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let raw: RawConfig = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    if raw.format_version != FORMAT_VERSION {
        return Err(ConfigError(format!(
            "{}: format_version must be \"{FORMAT_VERSION}\", got \"{}\"",
            path.display(),
            raw.format_version
        )));
    }
    Ok(FileConfig {
        path: path.to_path_buf(),
        text,
        experiment: raw.experiment,
        output_dir: raw.output_dir,
        params: raw.params.unwrap_or_default(),
    })
}

/// Line of the first `"key"` occurrence in the file, for diagnostics.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

/// Deserializes merged params strictly, pointing at the offending key.
pub fn typed_params<T: DeserializeOwned>(
    params: Map<String, Value>,
    file: Option<&FileConfig>,
) -> Result<T, ConfigError> {
    serde_json::from_value(Value::Object(params)).map_err(|e| {
        let msg = e.to_string();
        let key = msg.split('`').nth(1).map(str::to_owned);
        let location = match (file, key.as_deref()) {
            (Some(f), Some(k)) => match key_line(&f.text, k) {
                Some(line) => format!("{} line {line}: ", f.path.display()),
                None => format!("{}: ", f.path.display()),
            },
            (Some(f), None) => format!("{}: ", f.path.display()),
            (None, _) => String::new(),
        };
        ConfigError(format!("{location}params: {msg}"))
    })
}

/// Inserts `value` under `key` when the flag was given.
pub fn set<V: Serialize>(params: &mut Map<String, Value>, key: &str, value: Option<V>) {
    if let Some(v) = value {
        params.insert(key.to_owned(), serde_json::to_value(v).expect("flag values serialize"));
    }
}

fn default_n_grid() -> usize {
    256
}
fn default_alpha() -> f64 {
    1.0
}
fn default_rho() -> f64 {
    2.0
}
fn default_r_norm() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_sample_every() -> usize {
    10
}
fn default_box_per_xi0() -> f64 {
    40.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenmodesParams {
    /// Trap width; takes precedence over `dg_ratio`.
    #[serde(default)]
    pub xi0: Option<f64>,
    #[serde(default)]
    pub dg_ratio: Option<f64>,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    #[serde(default, rename = "box")]
    pub box_len: Option<f64>,
    #[serde(default = "default_box_per_xi0")]
    pub box_per_xi0: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_r_norm")]
    pub r_norm: f64,
    #[serde(default = "default_n_modes")]
    pub n_modes: usize,
}

fn default_n_modes() -> usize {
    6
}

fn default_dg_ratio() -> f64 {
    3.0
}

/// Shared by `rabi` and `upi`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapRunParams {
    #[serde(default = "default_dg_ratio")]
    pub dg_ratio: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    #[serde(default, rename = "box")]
    pub box_len: Option<f64>,
    #[serde(default = "default_box_per_xi0")]
    pub box_per_xi0: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_r_norm")]
    pub r_norm: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Every `flux_stride`-th sample is written to flux.csv; 0 disables it.
    #[serde(default = "default_flux_stride")]
    pub flux_stride: usize,
    /// `upi` only: also write the state at the gate time.
    #[serde(default)]
    pub checkpoint: bool,
}

fn default_flux_stride() -> usize {
    10
}

fn default_dg_ratios() -> Vec<f64> {
    vec![2.0, 3.0, 4.0, 6.0, 8.0]
}

fn default_sweep_dt() -> f64 {
    5e-4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzSweepParams {
    #[serde(default = "default_dg_ratios")]
    pub dg_ratios: Vec<f64>,
    #[serde(default = "default_sweep_dt")]
    pub dt: f64,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    #[serde(default = "default_box_per_xi0")]
    pub box_per_xi0: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_r_norm")]
    pub r_norm: f64,
}

fn default_t_pis() -> Vec<f64> {
    vec![10.0]
}
fn default_tau_gs() -> Vec<f64> {
    vec![1.0, 1.25, 1.5, 1.75, 2.0, 2.5]
}
fn default_gauss_dt() -> f64 {
    5e-3
}
fn default_gauss_n_grid() -> usize {
    512
}
fn default_gauss_box() -> f64 {
    120.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSweepParams {
    #[serde(default = "default_t_pis")]
    pub t_pi: Vec<f64>,
    #[serde(default = "default_tau_gs")]
    pub tau_g: Vec<f64>,
    #[serde(default = "default_gauss_dt")]
    pub dt: f64,
    #[serde(default = "default_gauss_n_grid")]
    pub n_grid: usize,
    #[serde(default = "default_gauss_box", rename = "box")]
    pub box_len: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_r_norm")]
    pub r_norm: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FomParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platforms: Option<Vec<PlatformRecord>>,
    /// JSON array of platform records; relative to the config file when one is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platforms_file: Option<PathBuf>,
}
