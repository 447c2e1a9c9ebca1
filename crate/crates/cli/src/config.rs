//! JSON experiment configuration.

use std::collections::BTreeSet;
use std::path::PathBuf;

use pipg::datagen::{ARGenConfig, GeneratorConfig, RidgeGenConfig};
use pipg::models::ObservationKind;
use pipg::solvers::{StepSchedule, TraceConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Ridge,
    SparseNonlinear,
    /// No generator; data must come from `replay`.
    Custom,
}

/// Generator parameters. Unset fields take experiment-specific defaults;
/// the generator seed is the master seed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ar_coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegularizerSpec {
    None,
    /// `lambda/2 |theta|^2`.
    Ridge {
        lambda: f64,
    },
    SmoothedL2l1 {
        lambda: f64,
        delta: f64,
    },
}

/// Either an explicit list or `count` evenly spaced values in `[start, stop]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaGrid {
    List(Vec<f64>),
    Linspace { start: f64, stop: f64, count: usize },
}

impl GammaGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GammaGrid::List(v) => v.clone(),
            GammaGrid::Linspace { start, stop, count } => match *count {
                0 => Vec::new(),
                1 => vec![*start],
                c => (0..c)
                    .map(|i| start + (stop - start) * i as f64 / (c - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IpgStep {
    Constant,
    PolynomialDecay,
}

fn one() -> f64 {
    1.0
}

fn one_pass() -> usize {
    1
}

fn ipg_exponent() -> f64 {
    0.51
}

fn ipg_step() -> IpgStep {
    IpgStep::PolynomialDecay
}

/// One solver entry. The grid value `gamma` is PIPG's step size and the
/// schedule base for the baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverSpec {
    Pipg {
        #[serde(default = "one")]
        v0: f64,
        #[serde(default)]
        process_noise: f64,
        #[serde(default = "one_pass")]
        passes: usize,
        #[serde(default)]
        shuffle: bool,
    },
    Ipg {
        #[serde(default = "ipg_step")]
        step: IpgStep,
        #[serde(default = "ipg_exponent")]
        exponent: f64,
        #[serde(default = "one_pass")]
        passes: usize,
        #[serde(default)]
        shuffle: bool,
    },
    Sgd {
        /// Defaults to the grid value.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha0: Option<f64>,
        #[serde(default)]
        alpha1: f64,
        #[serde(default = "one_pass")]
        passes: usize,
        #[serde(default)]
        shuffle: bool,
    },
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Pipg { .. } => "pipg",
            SolverSpec::Ipg { .. } => "ipg",
            SolverSpec::Sgd { .. } => "sgd",
        }
    }

    pub fn passes(&self) -> usize {
        match *self {
            SolverSpec::Pipg { passes, .. }
            | SolverSpec::Ipg { passes, .. }
            | SolverSpec::Sgd { passes, .. } => passes,
        }
    }

    pub fn shuffle(&self) -> bool {
        match *self {
            SolverSpec::Pipg { shuffle, .. }
            | SolverSpec::Ipg { shuffle, .. }
            | SolverSpec::Sgd { shuffle, .. } => shuffle,
        }
    }

    /// Baseline step schedule for grid value `gamma`; `None` for PIPG.
    pub fn schedule(&self, gamma: f64) -> Option<StepSchedule> {
        match *self {
            SolverSpec::Pipg { .. } => None,
            SolverSpec::Ipg {
                step: IpgStep::Constant,
                ..
            } => Some(StepSchedule::Constant { base: gamma }),
            SolverSpec::Ipg {
                step: IpgStep::PolynomialDecay,
                exponent,
                ..
            } => Some(StepSchedule::PolynomialDecay {
                base: gamma,
                exponent,
            }),
            SolverSpec::Sgd { alpha0, alpha1, .. } => Some(StepSchedule::RationalDecay {
                alpha0: alpha0.unwrap_or(gamma),
                alpha1,
            }),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub generator: GeneratorParams,
    /// Defaults to linear for ridge and custom, sigmoid for sparse-nonlinear.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationKind>,
    pub regularizer: RegularizerSpec,
    pub gamma_grid: GammaGrid,
    pub solvers: Vec<SolverSpec>,
    #[serde(default)]
    pub trace: TraceConfig,
    /// Free-form annotations copied into the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<serde_json::Value>,
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn observation_kind(&self) -> ObservationKind {
        self.observation.unwrap_or(match self.experiment {
            ExperimentKind::SparseNonlinear => ObservationKind::Sigmoid,
            ExperimentKind::Ridge | ExperimentKind::Custom => ObservationKind::Linear,
        })
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.gamma_grid.values()
    }

    /// Generator settings for `ridge` and `sparse-nonlinear`.
    pub fn generator_config(&self) -> Result<Option<GeneratorConfig>, CliError> {
        let g = &self.generator;
        let need = |v: Option<usize>, field: &str| {
            v.ok_or_else(|| {
                CliError::Config(format!("generator.{field} is required for this experiment"))
            })
        };
        let out = match self.experiment {
            ExperimentKind::Custom => None,
            ExperimentKind::Ridge => {
                let cfg = RidgeGenConfig {
                    dimension: need(g.dimension, "dimension")?,
                    count: need(g.count, "count")?,
                    noise_variance: g.noise_variance.unwrap_or(1.0),
                    seed: self.seed,
                };
                cfg.validate()
                    .map_err(|e| CliError::Config(format!("generator: {e}")))?;
                Some(GeneratorConfig::Ridge(cfg))
            }
            ExperimentKind::SparseNonlinear => {
                let dimension = need(g.dimension, "dimension")?;
                let cfg = ARGenConfig {
                    dimension,
                    count: need(g.count, "count")?,
                    ar_coefficient: g.ar_coefficient.unwrap_or(0.8),
                    noise_precision: g.noise_precision.unwrap_or(1.0),
                    sparsity: g
                        .sparsity
                        .unwrap_or_else(|| ARGenConfig::default_sparsity(dimension)),
                    seed: self.seed,
                };
                cfg.validate()
                    .map_err(|e| CliError::Config(format!("generator: {e}")))?;
                Some(GeneratorConfig::SparseNonlinear(cfg))
            }
        };
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.solvers.is_empty() {
            return bad("at least one solver must be selected".into());
        }
        let mut names = BTreeSet::new();
        for s in &self.solvers {
            if !names.insert(s.name()) {
                return bad(format!("solver `{}` listed more than once", s.name()));
            }
            if s.passes() == 0 {
                return bad(format!("solver `{}`: passes must be at least 1", s.name()));
            }
            match *s {
                SolverSpec::Pipg {
                    v0, process_noise, ..
                } => {
                    if !(v0 > 0.0 && v0.is_finite()) {
                        return bad(format!("pipg: v0 must be positive, got {v0}"));
                    }
                    if !(process_noise >= 0.0 && process_noise.is_finite()) {
                        return bad(format!(
                            "pipg: process_noise must be non-negative, got {process_noise}"
                        ));
                    }
                }
                SolverSpec::Ipg { exponent, .. } => {
                    if self.observation_kind() != ObservationKind::Linear {
                        return bad("ipg requires linear observations".into());
                    }
                    if matches!(self.regularizer, RegularizerSpec::SmoothedL2l1 { .. }) {
                        return bad("ipg requires a ridge or empty regularizer".into());
                    }
                    if !(exponent >= 0.0 && exponent.is_finite()) {
                        return bad(format!(
                            "ipg: exponent must be non-negative, got {exponent}"
                        ));
                    }
                }
                SolverSpec::Sgd { alpha0, alpha1, .. } => {
                    if let Some(a) = alpha0 {
                        if !(a > 0.0 && a.is_finite()) {
                            return bad(format!("sgd: alpha0 must be positive, got {a}"));
                        }
                    }
                    if !(alpha1 >= 0.0 && alpha1.is_finite()) {
                        return bad(format!("sgd: alpha1 must be non-negative, got {alpha1}"));
                    }
                }
            }
        }

        match self.regularizer {
            RegularizerSpec::None => {}
            RegularizerSpec::Ridge { lambda } => {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    return bad(format!("ridge lambda must be non-negative, got {lambda}"));
                }
            }
            RegularizerSpec::SmoothedL2l1 { lambda, delta } => {
                if !(lambda > 0.0 && lambda.is_finite() && delta > 0.0 && delta.is_finite()) {
                    return bad(format!(
                        "smoothed-l2l1 needs positive lambda and delta, got ({lambda}, {delta})"
                    ));
                }
            }
        }

        let gammas = self.gammas();
        if gammas.is_empty() {
            return bad("gamma grid is empty".into());
        }
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return bad(format!("grid values must be positive, got {g}"));
        }
        let labels: BTreeSet<String> = gammas.iter().map(|&g| gamma_label(g)).collect();
        if labels.len() != gammas.len() {
            return bad("grid values must be distinct to 10 decimal places".into());
        }

        if self.trace.rmse_stride == 0 || self.trace.cov_stride == Some(0) {
            return bad("trace strides must be at least 1".into());
        }
        if self.experiment == ExperimentKind::Custom && self.generator != GeneratorParams::default()
        {
            return bad("custom experiments take no generator settings".into());
        }
        self.generator_config()?;
        Ok(())
    }
}

/// File-name form of a grid value: fixed point, trailing zeros removed.
pub fn gamma_label(gamma: f64) -> String {
    let s = format!("{gamma:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment": "ridge",
        "generator": {"dimension": 3, "count": 10},
        "regularizer": {"kind": "ridge", "lambda": 0.01},
        "gamma_grid": {"start": 0.005, "stop": 0.2, "count": 40},
        "solvers": [{"solver": "pipg"}, {"solver": "ipg"}]
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        let g = cfg.gammas();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 0.005);
        assert_eq!(g[39], 0.2);
        assert_eq!(cfg.observation_kind(), ObservationKind::Linear);
        assert_eq!(
            cfg.solvers[1].schedule(0.1),
            Some(StepSchedule::PolynomialDecay {
                base: 0.1,
                exponent: 0.51
            })
        );
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err =
            ExperimentConfig::from_json("{\n  \"experiment\": \"ridge\",\n  oops\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn unknown_field_rejected() {
        let text = MINIMAL.replace("\"count\": 10}", "\"count\": 10, \"bogus\": 1}");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn empty_solver_list_rejected() {
        let text = MINIMAL.replace(r#"[{"solver": "pipg"}, {"solver": "ipg"}]"#, "[]");
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("at least one solver"));
    }

    #[test]
    fn nonpositive_grid_rejected() {
        let text = MINIMAL.replace(
            r#"{"start": 0.005, "stop": 0.2, "count": 40}"#,
            "[0.1, 0.0]",
        );
        assert!(ExperimentConfig::from_json(&text).is_err());
    }

    #[test]
    fn ipg_with_sigmoid_rejected() {
        let text = MINIMAL.replace(
            "\"experiment\": \"ridge\"",
            "\"experiment\": \"sparse-nonlinear\"",
        );
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("ipg"));
    }

    #[test]
    fn labels() {
        assert_eq!(gamma_label(0.005), "0.005");
        assert_eq!(gamma_label(1.0), "1");
        assert_eq!(gamma_label(0.015000000000000001), "0.015");
        assert_eq!(gamma_label(0.2), "0.2");
    }
}
