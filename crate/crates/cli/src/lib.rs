//! Experiment runner behind the `pipg` binary.
//!
//! A JSON [`ExperimentConfig`] selects a data source, a regularizer, a grid
//! of step sizes and a set of solvers. Each (solver, step size) pair runs
//! independently and produces CSV traces plus a `manifest.json`.

pub mod config;
mod error;
pub mod output;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use runner::{derive_seed, replay, run_experiment, RunRecord, Summary, MANIFEST_FILE};

use std::path::{Path, PathBuf};

/// Reads a config file and applies command-line overrides.
pub fn load_config(
    path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.validate()?;
    Ok(cfg)
}
