//! Executes every (solver, grid value) pair and writes the outputs.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use pipg::datagen::{generate_ridge, generate_sparse_nonlinear, import_dataset, GeneratorConfig};
use pipg::models::{QuadraticRegularizer, Regularizer, SmoothedL2L1Regularizer, ZeroRegularizer};
use pipg::solvers::{
    run_ipg, run_pipg, run_sgd, BaselineConfig, PriorCovariance, SolverConfig, Trace,
};
use pipg::{Dataset, PipgError};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{gamma_label, ExperimentConfig, GammaGrid, RegularizerSpec, SolverSpec};
use crate::error::CliError;
use crate::output::{cov_diag_csv, posterior_csv, trace_csv, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.json";

/// One finished (solver, grid value) run as listed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub solver: String,
    pub gamma: f64,
    pub gamma_index: usize,
    pub seed: u64,
    pub trace_file: String,
    pub initial_rmse: Option<f64>,
    pub final_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub output_dir: PathBuf,
    /// Written file names, manifest last.
    pub files: Vec<String>,
    pub runs: Vec<RunRecord>,
    pub warnings: Vec<String>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one run, derived from the master seed, solver name and grid index.
pub fn derive_seed(master: u64, solver: &str, gamma_index: usize) -> u64 {
    let mut s = splitmix64(master);
    for b in solver.bytes() {
        s = splitmix64(s ^ u64::from(b));
    }
    splitmix64(s ^ gamma_index as u64)
}

/// Generates the configured problem and runs it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    let generator = cfg.generator_config()?.ok_or_else(|| {
        CliError::Config("custom experiments have no generator; use `replay --data`".into())
    })?;
    let problem = match &generator {
        GeneratorConfig::Ridge(g) => generate_ridge(g),
        GeneratorConfig::SparseNonlinear(g) => generate_sparse_nonlinear(g),
    }
    .map_err(|e| CliError::Config(format!("generator: {e}")))?;
    let source = json!({ "generated": generator });
    execute(
        cfg,
        &problem.dataset,
        Some(&problem.ground_truth),
        source,
        Vec::new(),
    )
}

/// Runs the configured solvers on a dataset exported in the CSV format.
pub fn replay(cfg: &ExperimentConfig, data: &Path) -> Result<Summary, CliError> {
    let (dataset, truth) = import_dataset(data).map_err(|e| match e {
        PipgError::Io(io) => CliError::io(data, io),
        other => CliError::Input(other),
    })?;
    let mut warnings = Vec::new();
    if truth.is_none() {
        let msg = format!(
            "no ground-truth sidecar next to {}; rmse column omitted",
            data.display()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let source = json!({ "replayed": data.display().to_string() });
    execute(cfg, &dataset, truth.as_ref(), source, warnings)
}

enum Reg {
    Zero(ZeroRegularizer),
    Quadratic(QuadraticRegularizer),
    Smoothed(SmoothedL2L1Regularizer),
}

impl Reg {
    fn build(spec: &RegularizerSpec, dim: usize) -> Result<Self, CliError> {
        let reg = match *spec {
            RegularizerSpec::None => Reg::Zero(ZeroRegularizer),
            RegularizerSpec::Ridge { lambda } => {
                Reg::Quadratic(QuadraticRegularizer::ridge(dim, lambda).map_err(config)?)
            }
            RegularizerSpec::SmoothedL2l1 { lambda, delta } => {
                Reg::Smoothed(SmoothedL2L1Regularizer::new(lambda, delta).map_err(config)?)
            }
        };
        Ok(reg)
    }

    fn as_dyn(&self) -> &dyn Regularizer {
        match self {
            Reg::Zero(r) => r,
            Reg::Quadratic(r) => r,
            Reg::Smoothed(r) => r,
        }
    }
}

fn config(e: PipgError) -> CliError {
    CliError::Config(e.to_string())
}

struct Job<'a> {
    spec: &'a SolverSpec,
    gamma: f64,
    gamma_index: usize,
    seed: u64,
}

fn run_job(
    job: &Job<'_>,
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    truth: Option<&DVector<f64>>,
    reg: &Reg,
    ipg_reg: &QuadraticRegularizer,
) -> Result<Trace, PipgError> {
    let kind = cfg.observation_kind();
    match *job.spec {
        SolverSpec::Pipg {
            v0,
            process_noise,
            passes,
            shuffle,
        } => {
            let solver_cfg = SolverConfig {
                gamma: job.gamma,
                prior: PriorCovariance::Scaled(v0),
                initial_mean: None,
                process_noise_scale: process_noise,
                passes,
                shuffle,
                seed: job.seed,
                trace: cfg.trace,
            };
            run_pipg(dataset, kind, reg.as_dyn(), &solver_cfg, truth)
        }
        SolverSpec::Ipg { .. } | SolverSpec::Sgd { .. } => {
            let schedule = job
                .spec
                .schedule(job.gamma)
                .expect("baselines have a schedule");
            let base = BaselineConfig {
                passes: job.spec.passes(),
                shuffle: job.spec.shuffle(),
                seed: job.seed,
                trace: cfg.trace,
                ..BaselineConfig::new(schedule)
            };
            if matches!(job.spec, SolverSpec::Ipg { .. }) {
                run_ipg(dataset, ipg_reg, &base, truth)
            } else {
                run_sgd(dataset, kind, reg.as_dyn(), &base, truth)
            }
        }
    }
}

fn execute(
    cfg: &ExperimentConfig,
    dataset: &Dataset,
    truth: Option<&DVector<f64>>,
    source: serde_json::Value,
    warnings: Vec<String>,
) -> Result<Summary, CliError> {
    cfg.validate()?;
    let dim = dataset.dim();
    let reg = Reg::build(&cfg.regularizer, dim)?;
    let ipg_reg = match &reg {
        Reg::Quadratic(q) => q.clone(),
        _ => QuadraticRegularizer::ridge(dim, 0.0).map_err(config)?,
    };

    let gammas = cfg.gammas();
    let jobs: Vec<Job<'_>> = cfg
        .solvers
        .iter()
        .flat_map(|spec| {
            gammas
                .iter()
                .enumerate()
                .map(move |(gamma_index, &gamma)| Job {
                    spec,
                    gamma,
                    gamma_index,
                    seed: derive_seed(cfg.seed, spec.name(), gamma_index),
                })
        })
        .collect();

    let traces: Vec<Result<Trace, PipgError>> = jobs
        .par_iter()
        .map(|job| run_job(job, cfg, dataset, truth, &reg, &ipg_reg))
        .collect();

    let mut finished = Vec::with_capacity(jobs.len());
    for (job, trace) in jobs.iter().zip(traces) {
        let trace = trace.map_err(|source| CliError::Numeric {
            solver: job.spec.name().to_string(),
            gamma: job.gamma,
            source,
        })?;
        finished.push((job, trace));
    }

    let out_dir = &cfg.output_dir;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;

    let single = gammas.len() == 1;
    let mut outputs: Vec<(String, String)> = Vec::new();
    let mut runs = Vec::new();
    for (job, trace) in &finished {
        let name = job.spec.name();
        let label = gamma_label(job.gamma);
        let trace_file = format!("trace_{name}_{label}.csv");
        outputs.push((trace_file.clone(), trace_csv(trace)));
        let suffix = if single {
            String::new()
        } else {
            format!("_{label}")
        };
        outputs.push((
            format!("posterior_{name}{suffix}.csv"),
            posterior_csv(trace),
        ));
        if !trace.cov_snapshots.is_empty() {
            outputs.push((format!("cov_diag_{name}{suffix}.csv"), cov_diag_csv(trace)));
        }
        runs.push(RunRecord {
            solver: name.to_string(),
            gamma: job.gamma,
            gamma_index: job.gamma_index,
            seed: job.seed,
            trace_file,
            initial_rmse: trace.initial_rmse(),
            final_rmse: trace.final_rmse(),
        });
    }

    outputs
        .par_iter()
        .try_for_each(|(file, body)| write_atomic(&out_dir.join(file), body.as_bytes()))?;

    let mut files: Vec<String> = outputs.into_iter().map(|(f, _)| f).collect();
    files.push(MANIFEST_FILE.to_string());

    let mut resolved = cfg.clone();
    resolved.gamma_grid = GammaGrid::List(gammas);
    let manifest = json!({
        "seed": cfg.seed,
        "config": resolved,
        "data": source,
        "dimension": dim,
        "observations": dataset.len(),
        "files": files,
        "runs": runs,
        "warnings": warnings,
    });
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    write_atomic(&out_dir.join(MANIFEST_FILE), body.as_bytes())?;

    Ok(Summary {
        output_dir: out_dir.clone(),
        files,
        runs,
        warnings,
    })
}
