use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spatperm::spatial::MCParams;
use spatperm::{Dispersion, WeightSequence};

use crate::error::CliError;

/// Every field a subcommand may read. Unset fields take per-command
/// defaults, which are written back so the manifest records the values used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightSequence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispersion: Option<Dispersion>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_grid: Option<Vec<f64>>,
    /// Linear shift `c` for the shift-covariance check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift_c: Option<f64>,
    /// Box side.
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(rename = "L_list", skip_serializing_if = "Option::is_none")]
    pub l_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Used when `rho` is unset: `rho = rho_over_rho_c * rho_c`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_over_rho_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_cut: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_trunc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_cut: Option<usize>,
    /// Monte Carlo draws for the typicality events; 0 means exact.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<MCParams>,
}

macro_rules! defaulted {
    ($($name:ident: $ty:ty),* $(,)?) => {
        impl ExperimentConfig {
            $(
                pub fn $name(&mut self, default: $ty) -> $ty {
                    self.$name.get_or_insert(default).clone()
                }
            )*
        }
    };
}

defaulted!(
    seed: u64,
    tol: f64,
    weights: WeightSequence,
    dispersion: Dispersion,
    n: usize,
    n_max: usize,
    gamma: f64,
    s_grid: Vec<f64>,
    mu_grid: Vec<f64>,
    rho_grid: Vec<f64>,
    shift_c: f64,
    l: f64,
    l_list: Vec<f64>,
    rho_over_rho_c: f64,
    eta_exponent: f64,
    lambdas: Vec<f64>,
    eps_cut: f64,
    delta_trunc: f64,
    eps: f64,
    delta: f64,
    m_cut: usize,
    draws: usize,
    quad_tol: f64,
    pairs: Vec<(usize, usize)>,
    mc: MCParams,
);

/// `key=value` with a dotted key and a TOML value; bare words are strings.
fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::validation(format!("override `{item}` is not key=value")))?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::validation(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::validation(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads the config file (if any), applies overrides in order and
/// deserializes.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| CliError::io(format!("reading config {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| CliError::validation(format!("config {}: {}", p.display(), one_line(&e.to_string()))))?
        }
        None => toml::Table::new(),
    };
    for item in overrides {
        apply_override(&mut table, item)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::validation(format!("config: {}", one_line(&e.to_string()))))
}

pub fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
