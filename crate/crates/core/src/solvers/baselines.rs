use nalgebra::DVector;

use super::config::{initial_mean, BaselineConfig};
use super::trace::{Trace, TraceRecorder};
use super::PassOrder;
use crate::data::Dataset;
use crate::error::{ensure_finite_vec, PipgError, Result};
use crate::models::{
    prox_quadratic_identity, ObservationKind, ObservationModel, QuadraticRegularizer, Regularizer,
};

fn check_inputs(
    dataset: &Dataset,
    reg_dim: Option<usize>,
    truth: Option<&DVector<f64>>,
) -> Result<()> {
    if dataset.is_empty() {
        return Err(PipgError::InvalidArgument("dataset is empty".into()));
    }
    let d = dataset.dim();
    if reg_dim.is_some_and(|rd| rd != d) {
        return Err(PipgError::InvalidArgument(format!(
            "regularizer dimension does not match dataset dimension {d}"
        )));
    }
    if truth.is_some_and(|t| t.len() != d) {
        return Err(PipgError::InvalidArgument(format!(
            "ground truth length does not match dataset dimension {d}"
        )));
    }
    Ok(())
}

/// Incremental proximal gradient with identity metric.
///
/// Each iteration takes a gradient step on `g` then the proximal step of
/// `gamma_k f_k`:
/// `theta <- prox_{gamma_k f_k, I}((I - gamma_k A^T A) theta)`.
/// Observations must be linear so the prox has a closed form.
pub fn run_ipg(
    dataset: &Dataset,
    reg: &QuadraticRegularizer,
    cfg: &BaselineConfig,
    ground_truth: Option<&DVector<f64>>,
) -> Result<Trace> {
    cfg.validate()?;
    check_inputs(dataset, reg.dim(), ground_truth)?;

    let n = dataset.len();
    let mut recorder = TraceRecorder::new(&cfg.trace, n, cfg.passes, ground_truth)?;
    let mut order = PassOrder::new(n, cfg.shuffle, cfg.seed);
    let mut theta = initial_mean(&cfg.initial_mean, dataset.dim())?;
    recorder.record_estimate(0, 0, &theta)?;

    let mut iteration = 0;
    for pass in 0..cfg.passes {
        for &idx in order.next_pass() {
            iteration += 1;
            let obs = &dataset.observations()[idx];
            let step = || -> Result<DVector<f64>> {
                let gamma_k = cfg.schedule.step(iteration)?;
                let mut anchor = theta.clone();
                anchor.gemv(-gamma_k, reg.gram(), &theta, 1.0);
                prox_quadratic_identity(&anchor, obs, gamma_k)
            };
            theta = step().map_err(|e| e.at(pass, iteration))?;
            recorder
                .record_estimate(pass, iteration, &theta)
                .map_err(|e| e.at(pass, iteration))?;
        }
    }
    Ok(recorder.finish(theta, None))
}

/// Stochastic gradient descent on `f_k + g`:
/// `theta <- theta - gamma_k (-(y_k - h_k(theta)) grad h_k(theta) + grad g(theta))`.
pub fn run_sgd(
    dataset: &Dataset,
    kind: ObservationKind,
    reg: &dyn Regularizer,
    cfg: &BaselineConfig,
    ground_truth: Option<&DVector<f64>>,
) -> Result<Trace> {
    cfg.validate()?;
    check_inputs(dataset, reg.dim(), ground_truth)?;

    let n = dataset.len();
    let mut recorder = TraceRecorder::new(&cfg.trace, n, cfg.passes, ground_truth)?;
    let mut order = PassOrder::new(n, cfg.shuffle, cfg.seed);
    let mut theta = initial_mean(&cfg.initial_mean, dataset.dim())?;
    recorder.record_estimate(0, 0, &theta)?;

    let mut iteration = 0;
    for pass in 0..cfg.passes {
        for &idx in order.next_pass() {
            iteration += 1;
            let obs = &dataset.observations()[idx];
            let step = || -> Result<DVector<f64>> {
                let gamma_k = cfg.schedule.step(iteration)?;
                let (h, dh) = kind.bind(&obs.regressor).value_and_gradient(&theta);
                let mut grad = reg.gradient(&theta);
                grad.axpy(-(obs.y - h), &dh, 1.0);
                ensure_finite_vec(&grad, "stochastic gradient")?;
                let mut next = theta.clone();
                next.axpy(-gamma_k, &grad, 1.0);
                Ok(next)
            };
            theta = step().map_err(|e| e.at(pass, iteration))?;
            recorder
                .record_estimate(pass, iteration, &theta)
                .map_err(|e| e.at(pass, iteration))?;
        }
    }
    Ok(recorder.finish(theta, None))
}
