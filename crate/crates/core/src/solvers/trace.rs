use nalgebra::DVector;

use super::config::TraceConfig;
use crate::datagen::relative_error;
use crate::error::{PipgError, Result};
use crate::kalman::PosteriorState;

/// Relative error `|theta_k - theta*| / |theta*|` at one recorded iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Zero-based pass index.
    pub pass: usize,
    /// Cumulative iteration count across passes; 0 is the initial point.
    pub iteration: usize,
    /// `None` when no ground truth was supplied.
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovSnapshot {
    pub pass: usize,
    pub iteration: usize,
    pub diagonal: DVector<f64>,
}

/// Per-iteration history and final result of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Empty for solvers that keep no covariance.
    pub cov_snapshots: Vec<CovSnapshot>,
    /// Final point estimate.
    pub estimate: DVector<f64>,
    /// Final mean and covariance; `None` for the baselines.
    pub posterior: Option<PosteriorState>,
}

impl Trace {
    pub fn final_rmse(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.rmse)
    }

    pub fn initial_rmse(&self) -> Option<f64> {
        self.records.first().and_then(|r| r.rmse)
    }
}

pub(crate) struct TraceRecorder<'a> {
    truth: Option<&'a DVector<f64>>,
    rmse_stride: usize,
    cov_stride: usize,
    total: usize,
    records: Vec<TraceRecord>,
    cov_snapshots: Vec<CovSnapshot>,
}

impl<'a> TraceRecorder<'a> {
    pub(crate) fn new(
        cfg: &TraceConfig,
        n: usize,
        passes: usize,
        truth: Option<&'a DVector<f64>>,
    ) -> Result<Self> {
        if let Some(t) = truth {
            if t.norm() == 0.0 {
                return Err(PipgError::InvalidArgument(
                    "ground truth has zero norm".into(),
                ));
            }
        }
        Ok(Self {
            truth,
            rmse_stride: cfg.rmse_stride,
            cov_stride: cfg.resolved_cov_stride(n),
            total: n * passes,
            records: Vec::new(),
            cov_snapshots: Vec::new(),
        })
    }

    fn due(&self, iteration: usize, stride: usize) -> bool {
        iteration.is_multiple_of(stride) || iteration == self.total
    }

    pub(crate) fn record_estimate(
        &mut self,
        pass: usize,
        iteration: usize,
        estimate: &DVector<f64>,
    ) -> Result<()> {
        if self.due(iteration, self.rmse_stride) {
            let rmse = match self.truth {
                Some(t) => Some(relative_error(estimate, t)?),
                None => None,
            };
            self.records.push(TraceRecord {
                pass,
                iteration,
                rmse,
            });
        }
        Ok(())
    }

    pub(crate) fn record_state(
        &mut self,
        pass: usize,
        iteration: usize,
        state: &PosteriorState,
    ) -> Result<()> {
        self.record_estimate(pass, iteration, state.mean())?;
        if self.due(iteration, self.cov_stride) {
            self.cov_snapshots.push(CovSnapshot {
                pass,
                iteration,
                diagonal: state.cov().diagonal(),
            });
        }
        Ok(())
    }

    pub(crate) fn finish(self, estimate: DVector<f64>, posterior: Option<PosteriorState>) -> Trace {
        Trace {
            records: self.records,
            cov_snapshots: self.cov_snapshots,
            estimate,
            posterior,
        }
    }
}
