use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PipgError, Result};
use crate::kalman::PosteriorState;

/// Initial covariance `V_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorCovariance {
    /// `v0 * I`.
    Scaled(f64),
    Full(DMatrix<f64>),
}

/// Sampling strides for a [`Trace`](super::Trace).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    /// Record the relative error every `rmse_stride` iterations.
    pub rmse_stride: usize,
    /// Snapshot the covariance diagonal every `cov_stride` iterations;
    /// `None` means `max(1, n / 100)`.
    pub cov_stride: Option<usize>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            rmse_stride: 10,
            cov_stride: None,
        }
    }
}

impl TraceConfig {
    fn validate(&self) -> Result<()> {
        if self.rmse_stride == 0 || self.cov_stride == Some(0) {
            return Err(PipgError::InvalidArgument(
                "trace strides must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn resolved_cov_stride(&self, n: usize) -> usize {
        self.cov_stride.unwrap_or((n / 100).max(1))
    }
}

/// Settings for a PIPG run.
///
/// `gamma` is both the gradient step size and the observation-noise
/// precision.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub prior: PriorCovariance,
    /// Starting mean; the zero vector when `None`.
    pub initial_mean: Option<DVector<f64>>,
    /// `Q = q I`, used only on the EKF path.
    pub process_noise_scale: f64,
    pub passes: usize,
    pub shuffle: bool,
    pub seed: u64,
    pub trace: TraceConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            prior: PriorCovariance::Scaled(1.0),
            initial_mean: None,
            process_noise_scale: 0.0,
            passes: 1,
            shuffle: false,
            seed: 0,
            trace: TraceConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 || !self.gamma.is_finite() {
            return Err(PipgError::InvalidArgument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if let PriorCovariance::Scaled(v0) = self.prior {
            if v0 <= 0.0 || !v0.is_finite() {
                return Err(PipgError::InvalidArgument(format!(
                    "v0 must be positive, got {v0}"
                )));
            }
        }
        if self.process_noise_scale < 0.0 || !self.process_noise_scale.is_finite() {
            return Err(PipgError::InvalidArgument(format!(
                "process noise scale must be >= 0, got {}",
                self.process_noise_scale
            )));
        }
        if self.passes == 0 {
            return Err(PipgError::InvalidArgument(
                "passes must be at least 1".into(),
            ));
        }
        self.trace.validate()
    }

    pub fn initial_state(&self, dim: usize) -> Result<PosteriorState> {
        let mean = initial_mean(&self.initial_mean, dim)?;
        let cov = match &self.prior {
            PriorCovariance::Scaled(v0) => DMatrix::identity(dim, dim) * *v0,
            PriorCovariance::Full(m) => {
                if m.clone().cholesky().is_none() {
                    return Err(PipgError::InvalidArgument(
                        "prior covariance must be SPD".into(),
                    ));
                }
                m.clone()
            }
        };
        PosteriorState::new(mean, cov)
    }

    pub fn process_noise(&self, dim: usize) -> DMatrix<f64> {
        DMatrix::identity(dim, dim) * self.process_noise_scale
    }
}

pub(crate) fn initial_mean(mean: &Option<DVector<f64>>, dim: usize) -> Result<DVector<f64>> {
    match mean {
        None => Ok(DVector::zeros(dim)),
        Some(m) if m.len() == dim => Ok(m.clone()),
        Some(m) => Err(PipgError::InvalidArgument(format!(
            "initial mean has length {}, expected {dim}",
            m.len()
        ))),
    }
}

/// Step-size sequence `gamma_k` for the baselines, indexed from `k = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StepSchedule {
    /// `gamma_k = base`.
    Constant { base: f64 },
    /// `gamma_k = base / k^exponent`.
    PolynomialDecay { base: f64, exponent: f64 },
    /// `gamma_k = alpha0 / (1 + alpha1 k)`.
    RationalDecay { alpha0: f64, alpha1: f64 },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::Constant { base } => base > 0.0 && base.is_finite(),
            StepSchedule::PolynomialDecay { base, exponent } => {
                base > 0.0 && base.is_finite() && exponent >= 0.0 && exponent.is_finite()
            }
            StepSchedule::RationalDecay { alpha0, alpha1 } => {
                alpha0 > 0.0 && alpha0.is_finite() && alpha1 >= 0.0 && alpha1.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(PipgError::InvalidArgument(format!(
                "invalid step schedule {self:?}"
            )))
        }
    }

    /// Step size at iteration `k`. Errors if the result is not positive.
    pub fn step(&self, k: usize) -> Result<f64> {
        let kf = k as f64;
        let step = match *self {
            StepSchedule::Constant { base } => base,
            StepSchedule::PolynomialDecay { base, exponent } => base / kf.powf(exponent),
            StepSchedule::RationalDecay { alpha0, alpha1 } => alpha0 / (1.0 + alpha1 * kf),
        };
        if step > 0.0 && step.is_finite() {
            Ok(step)
        } else {
            Err(PipgError::InvalidArgument(format!(
                "schedule {self:?} gives step {step} at k = {k}"
            )))
        }
    }
}

/// Settings for the IPG and SGD baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub schedule: StepSchedule,
    pub initial_mean: Option<DVector<f64>>,
    pub passes: usize,
    pub shuffle: bool,
    pub seed: u64,
    pub trace: TraceConfig,
}

impl BaselineConfig {
    pub fn new(schedule: StepSchedule) -> Self {
        Self {
            schedule,
            initial_mean: None,
            passes: 1,
            shuffle: false,
            seed: 0,
            trace: TraceConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if self.passes == 0 {
            return Err(PipgError::InvalidArgument(
                "passes must be at least 1".into(),
            ));
        }
        self.trace.validate()
    }
}
