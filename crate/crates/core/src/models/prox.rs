use nalgebra::{DMatrix, DVector};

use crate::data::Observation;
use crate::error::{ensure_finite_vec, ensure_square, PipgError, Result};

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(PipgError::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

/// Proximal operator of `gamma * 1/2 (y - x^T theta)^2` in the metric of an
/// SPD matrix `V`:
///
/// `argmin gamma/2 (y - x^T theta)^2 + 1/2 (theta - anchor)^T V^{-1} (theta - anchor)`.
///
/// Solved from the normal equations in information form,
/// `(V^{-1} + gamma x x^T) theta = V^{-1} anchor + gamma x y`.
pub fn prox_quadratic_metric(
    anchor: &DVector<f64>,
    metric: &DMatrix<f64>,
    obs: &Observation,
    gamma: f64,
) -> Result<DVector<f64>> {
    let d = anchor.len();
    ensure_square(metric, d, "metric")?;
    if obs.regressor.len() != d {
        return Err(PipgError::InvalidArgument(format!(
            "regressor length {} does not match anchor length {d}",
            obs.regressor.len()
        )));
    }
    check_gamma(gamma)?;
    ensure_finite_vec(anchor, "prox anchor")?;

    let metric_inv = metric
        .clone()
        .cholesky()
        .ok_or_else(|| PipgError::IllConditioned("prox metric is not positive definite".into()))?
        .inverse();

    let x = &obs.regressor;
    let mut precision = metric_inv.clone();
    precision.ger(gamma, x, x, 1.0);
    let rhs = &metric_inv * anchor + x * (gamma * obs.y);

    let theta = precision
        .cholesky()
        .ok_or_else(|| {
            PipgError::IllConditioned("prox normal equations are not positive definite".into())
        })?
        .solve(&rhs);
    ensure_finite_vec(&theta, "prox output")?;
    Ok(theta)
}

/// [`prox_quadratic_metric`] with `V = I`, in closed form:
/// `anchor + x (y - x^T anchor) gamma / (1 + gamma |x|^2)`.
pub fn prox_quadratic_identity(
    anchor: &DVector<f64>,
    obs: &Observation,
    gamma: f64,
) -> Result<DVector<f64>> {
    if obs.regressor.len() != anchor.len() {
        return Err(PipgError::InvalidArgument(format!(
            "regressor length {} does not match anchor length {}",
            obs.regressor.len(),
            anchor.len()
        )));
    }
    check_gamma(gamma)?;
    let x = &obs.regressor;
    let residual = obs.y - x.dot(anchor);
    let theta = anchor + x * (gamma * residual / (1.0 + gamma * x.norm_squared()));
    ensure_finite_vec(&theta, "prox output")?;
    Ok(theta)
}
