use nalgebra::{DMatrix, DVector};

use super::config::SolverConfig;
use super::trace::{Trace, TraceRecorder};
use super::PassOrder;
use crate::data::{Dataset, Observation};
use crate::error::{PipgError, Result};
use crate::kalman::{
    predict, propagate_covariance, rank_one_update, MeasurementLinearization, PosteriorState,
};
use crate::models::{
    gradient_step_map, transition_matrix, ObservationKind, ObservationModel, QuadraticRegularizer,
    Regularizer,
};

/// Callback invoked with `(pass, iteration, state)` after every iteration,
/// and once for the initial state with iteration 0.
pub type StepObserver<'a> = dyn FnMut(usize, usize, &PosteriorState) + 'a;

/// One exact PIPG step for a linear observation and quadratic regularizer.
///
/// Predicts with `M = I - gamma V A^T A` and no process noise, then applies
/// the Kalman update along `x_k`.
pub fn pipg_step_linear(
    state: &PosteriorState,
    obs: &Observation,
    reg: &QuadraticRegularizer,
    cfg: &SolverConfig,
) -> Result<PosteriorState> {
    let d = state.dim();
    let transition = transition_matrix(state.mean(), state.cov(), cfg.gamma, reg)?;
    let predicted = predict(state, &transition, &DMatrix::zeros(d, d))?;
    let meas = MeasurementLinearization {
        predicted_output: obs.regressor.dot(predicted.mean()),
        direction: obs.regressor.clone(),
        observed_output: obs.y,
        noise_precision: cfg.gamma,
    };
    rank_one_update(&predicted, &meas)
}

/// One EKF-based PIPG step for an arbitrary observation map and
/// twice-differentiable regularizer.
///
/// The mean is predicted through the nonlinear gradient step, the
/// covariance through its Jacobian plus `Q = q I`. The observation is then
/// linearized at the predicted mean.
pub fn pipg_step_general(
    state: &PosteriorState,
    model: &dyn ObservationModel,
    observed: f64,
    reg: &dyn Regularizer,
    cfg: &SolverConfig,
) -> Result<PosteriorState> {
    let d = state.dim();
    let predicted_mean = gradient_step_map(state.mean(), state.cov(), cfg.gamma, reg)?;
    let transition = transition_matrix(state.mean(), state.cov(), cfg.gamma, reg)?;
    let predicted_cov = propagate_covariance(state.cov(), &transition, &cfg.process_noise(d))?;

    let (h, direction) = model.value_and_gradient(&predicted_mean);
    if !h.is_finite() || direction.iter().any(|v| !v.is_finite()) {
        return Err(PipgError::NumericInput(format!(
            "observation model returned non-finite value {h} or gradient"
        )));
    }
    if direction.len() != d {
        return Err(PipgError::InvalidArgument(format!(
            "observation gradient has length {}, expected {d}",
            direction.len()
        )));
    }

    let predicted = PosteriorState::new(predicted_mean, predicted_cov)?;
    let meas = MeasurementLinearization {
        direction,
        predicted_output: h,
        observed_output: observed,
        noise_precision: cfg.gamma,
    };
    rank_one_update(&predicted, &meas)
}

/// Runs PIPG over `dataset`.
///
/// Linear observations with a quadratic regularizer take the exact path
/// ([`pipg_step_linear`], no process noise); everything else takes the EKF
/// path ([`pipg_step_general`]).
pub fn run_pipg(
    dataset: &Dataset,
    kind: ObservationKind,
    reg: &dyn Regularizer,
    cfg: &SolverConfig,
    ground_truth: Option<&DVector<f64>>,
) -> Result<Trace> {
    run_pipg_with_observer(dataset, kind, reg, cfg, ground_truth, &mut |_, _, _| {})
}

/// [`run_pipg`] with a callback that sees every intermediate state.
pub fn run_pipg_with_observer(
    dataset: &Dataset,
    kind: ObservationKind,
    reg: &dyn Regularizer,
    cfg: &SolverConfig,
    ground_truth: Option<&DVector<f64>>,
    observer: &mut StepObserver<'_>,
) -> Result<Trace> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(PipgError::InvalidArgument("dataset is empty".into()));
    }
    let d = dataset.dim();
    if let Some(t) = ground_truth {
        if t.len() != d {
            return Err(PipgError::InvalidArgument(format!(
                "ground truth has length {}, dataset dimension is {d}",
                t.len()
            )));
        }
    }
    if let Some(rd) = reg.dim() {
        if rd != d {
            return Err(PipgError::InvalidArgument(format!(
                "regularizer dimension {rd} does not match dataset dimension {d}"
            )));
        }
    }

    let linear_path = match (kind, reg.as_quadratic()) {
        (ObservationKind::Linear, Some(q)) => Some(q),
        _ => None,
    };

    let n = dataset.len();
    let mut recorder = TraceRecorder::new(&cfg.trace, n, cfg.passes, ground_truth)?;
    let mut order = PassOrder::new(n, cfg.shuffle, cfg.seed);
    let mut state = cfg.initial_state(d)?;
    recorder.record_state(0, 0, &state)?;
    observer(0, 0, &state);

    let mut iteration = 0;
    for pass in 0..cfg.passes {
        for &idx in order.next_pass() {
            iteration += 1;
            let obs = &dataset.observations()[idx];
            let step = match linear_path {
                Some(quad) => pipg_step_linear(&state, obs, quad, cfg),
                None => pipg_step_general(&state, &kind.bind(&obs.regressor), obs.y, reg, cfg),
            };
            state = step.map_err(|e| e.at(pass, iteration))?;
            recorder
                .record_state(pass, iteration, &state)
                .map_err(|e| e.at(pass, iteration))?;
            observer(pass, iteration, &state);
        }
    }

    let estimate = state.mean().clone();
    Ok(recorder.finish(estimate, Some(state)))
}
