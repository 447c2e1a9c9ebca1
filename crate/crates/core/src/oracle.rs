//! Slow, direct reference computations used to check the solvers.
//!
//! Nothing here calls into the Kalman kernels or the model maps; each
//! routine forms the relevant dense system explicitly and solves it.

use nalgebra::{DMatrix, DVector};

use crate::data::Dataset;
use crate::error::{ensure_finite_vec, ensure_square, PipgError, Result};
use crate::models::QuadraticRegularizer;

/// Gaussian posterior produced by an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OraclePosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

fn check_prior(
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
    dataset: &Dataset,
    gamma: f64,
) -> Result<()> {
    let d = prior_mean.len();
    ensure_square(prior_cov, d, "prior covariance")?;
    if dataset.dim() != d {
        return Err(PipgError::InvalidArgument(format!(
            "dataset dimension {} does not match prior dimension {d}",
            dataset.dim()
        )));
    }
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(PipgError::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

fn invert(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| PipgError::IllConditioned(format!("{what} is singular")))
}

fn symmetric(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Conjugate Gaussian posterior for `y_k ~ N(x_k^T theta, 1/gamma)`, in
/// precision form:
/// `cov = (V0^{-1} + gamma sum x x^T)^{-1}`,
/// `mean = cov (V0^{-1} m0 + gamma sum x y)`.
pub fn batch_posterior(
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
    dataset: &Dataset,
    gamma: f64,
) -> Result<OraclePosterior> {
    check_prior(prior_mean, prior_cov, dataset, gamma)?;
    let prior_precision = invert(prior_cov, "prior covariance")?;
    let mut precision = prior_precision.clone();
    let mut info = &prior_precision * prior_mean;
    for obs in dataset {
        precision += &obs.regressor * obs.regressor.transpose() * gamma;
        info += &obs.regressor * (gamma * obs.y);
    }
    let lu = precision.clone().lu();
    let mean = lu
        .solve(&info)
        .ok_or_else(|| PipgError::IllConditioned("posterior precision is singular".into()))?;
    let cov = symmetric(invert(&precision, "posterior precision")?);
    ensure_finite_vec(&mean, "oracle mean")?;
    Ok(OraclePosterior { mean, cov })
}

/// Exact posterior of the final state of the linear state-space model
/// `theta_k = M_k theta_{k-1}`, `y_k ~ N(x_k^T theta_k, 1/gamma)` with
/// `M_k = I - gamma V_{k-1} A^T A`.
///
/// The `V_{k-1}` sequence is replayed to obtain each `M_k`. The posterior
/// itself is then computed without filtering: with `Phi_k = M_k ... M_1`
/// every observation is a linear measurement `x_k^T Phi_k theta_0` of the
/// initial state, whose batch posterior is pushed forward through `Phi_n`.
pub fn state_space_posterior(
    prior_mean: &DVector<f64>,
    prior_cov: &DMatrix<f64>,
    dataset: &Dataset,
    gamma: f64,
    reg: &QuadraticRegularizer,
) -> Result<OraclePosterior> {
    check_prior(prior_mean, prior_cov, dataset, gamma)?;
    let d = prior_mean.len();
    let gram = reg.gram();
    ensure_square(gram, d, "regularizer gram matrix")?;
    let eye = DMatrix::<f64>::identity(d, d);

    let prior_precision = invert(prior_cov, "prior covariance")?;
    let mut precision = prior_precision.clone();
    let mut info = &prior_precision * prior_mean;

    let mut v = prior_cov.clone();
    let mut phi = eye.clone();
    for obs in dataset {
        let m = &eye - &v * gram * gamma;
        phi = &m * phi;

        let v_pred = &m * &v * m.transpose();
        let x = &obs.regressor;
        let vx = &v_pred * x;
        let s = gamma.recip() + x.dot(&vx);
        v = symmetric(v_pred - &vx * vx.transpose() / s);

        let row = phi.transpose() * x;
        precision += &row * row.transpose() * gamma;
        info += row * (gamma * obs.y);
    }

    let initial_cov = symmetric(invert(&precision, "initial-state posterior precision")?);
    let initial_mean = &initial_cov * info;
    let mean = &phi * initial_mean;
    let cov = symmetric(&phi * initial_cov * phi.transpose());
    ensure_finite_vec(&mean, "oracle mean")?;
    Ok(OraclePosterior { mean, cov })
}

/// A smooth scalar function with its gradient.
pub trait SmoothFunction {
    fn value(&self, theta: &DVector<f64>) -> f64;
    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64>;
}

/// Adapts a pair of closures to [`SmoothFunction`].
pub struct FnSmooth<V, G> {
    pub value: V,
    pub gradient: G,
}

impl<V, G> SmoothFunction for FnSmooth<V, G>
where
    V: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn value(&self, theta: &DVector<f64>) -> f64 {
        (self.value)(theta)
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(theta)
    }
}

const PROX_TOLERANCE: f64 = 1e-10;
const PROX_MAX_ITERS: usize = 500;

/// Minimizes `gamma loss(theta) + 1/2 (theta - anchor)^T V^{-1} (theta - anchor)`
/// by damped Newton, with the Hessian taken from finite differences of the
/// objective gradient. Stops once the gradient norm is below `1e-10`.
pub fn numeric_prox(
    anchor: &DVector<f64>,
    metric: &DMatrix<f64>,
    loss: &dyn SmoothFunction,
    gamma: f64,
) -> Result<DVector<f64>> {
    let d = anchor.len();
    ensure_square(metric, d, "metric")?;
    let metric_inv = invert(metric, "metric")?;

    let objective = |t: &DVector<f64>| {
        let diff = t - anchor;
        gamma * loss.value(t) + 0.5 * diff.dot(&(&metric_inv * &diff))
    };
    let grad = |t: &DVector<f64>| loss.gradient(t) * gamma + &metric_inv * (t - anchor);

    let mut theta = anchor.clone();
    for _ in 0..PROX_MAX_ITERS {
        let g = grad(&theta);
        if !g.iter().all(|v| v.is_finite()) {
            return Err(PipgError::OracleFailure(
                "objective gradient is not finite".into(),
            ));
        }
        if g.norm() < PROX_TOLERANCE {
            return Ok(theta);
        }
        let hess = symmetric(finite_difference_hessian(&grad, &theta, 1e-6)?);
        let direction = match hess.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -&g,
        };

        let f0 = objective(&theta);
        let slope = g.dot(&direction);
        let mut step = 1.0;
        let mut next = &theta + &direction;
        while objective(&next) > f0 + 1e-4 * step * slope + 1e-14 * f0.abs().max(1.0) {
            step *= 0.5;
            if step < 1e-12 {
                return Err(PipgError::OracleFailure("line search stalled".into()));
            }
            next = &theta + &direction * step;
        }
        theta = next;
    }
    Err(PipgError::OracleFailure(format!(
        "numeric prox did not converge in {PROX_MAX_ITERS} iterations"
    )))
}

/// Central-difference gradient of `f` at `theta`.
pub fn finite_difference_gradient(
    f: &dyn Fn(&DVector<f64>) -> f64,
    theta: &DVector<f64>,
    step: f64,
) -> Result<DVector<f64>> {
    let mut probe = theta.clone();
    let mut out = DVector::zeros(theta.len());
    for i in 0..theta.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = f(&probe);
        probe[i] = orig - step;
        let minus = f(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(PipgError::NumericInput(format!(
                "function is not finite near coordinate {i}"
            )));
        }
        out[i] = (plus - minus) / (2.0 * step);
    }
    Ok(out)
}

/// Central-difference Jacobian of a gradient map; column `j` is the
/// derivative along coordinate `j`.
pub fn finite_difference_hessian(
    gradient: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    theta: &DVector<f64>,
    step: f64,
) -> Result<DMatrix<f64>> {
    let d = theta.len();
    let mut probe = theta.clone();
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        let orig = probe[j];
        probe[j] = orig + step;
        let plus = gradient(&probe);
        probe[j] = orig - step;
        let minus = gradient(&probe);
        probe[j] = orig;
        if plus.len() != d || minus.len() != d {
            return Err(PipgError::InvalidArgument(
                "gradient has the wrong length".into(),
            ));
        }
        if !plus.iter().chain(minus.iter()).all(|v| v.is_finite()) {
            return Err(PipgError::NumericInput(format!(
                "gradient is not finite near coordinate {j}"
            )));
        }
        out.set_column(j, &((plus - minus) / (2.0 * step)));
    }
    Ok(out)
}

/// `|a - b| / max(|a|, |b|)` in the Frobenius norm, with two near-zero
/// arguments (both norms below `1e-12`) counted as equal.
pub fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-12 {
        0.0
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Observation;
    use crate::models::prox_quadratic_metric;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn batch_without_data_is_prior() {
        let m0 = dvector![1.0, -1.0];
        let v0 = dmatrix![2.0, 0.5; 0.5, 1.0];
        let post = batch_posterior(&m0, &v0, &Dataset::new(2, vec![]).unwrap(), 1.0).unwrap();
        assert!((post.mean - m0).amax() < 1e-14);
        assert!((post.cov - v0).amax() < 1e-14);
    }

    #[test]
    fn batch_scalar_conjugate() {
        let ds = Dataset::new(1, vec![Observation::new(1.0, dvector![1.0])]).unwrap();
        let post = batch_posterior(&dvector![0.0], &dmatrix![1.0], &ds, 1.0).unwrap();
        assert!((post.mean[0] - 0.5).abs() < 1e-15);
        assert!((post.cov[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn state_space_scalar_two_step() {
        // predict: m = (1 - g l v) m0, v' = (1 - g l v)^2 v ; then update.
        let (gamma, lambda, v0, m0, x, y) = (0.5, 0.4, 2.0, 1.0, 1.5, 0.3);
        let reg = QuadraticRegularizer::ridge(1, lambda).unwrap();
        let ds = Dataset::new(1, vec![Observation::new(y, dvector![x])]).unwrap();
        let post = state_space_posterior(&dvector![m0], &dmatrix![v0], &ds, gamma, &reg).unwrap();

        let m = 1.0 - gamma * lambda * v0;
        let (mp, vp) = (m * m0, m * m * v0);
        let s = 1.0 / gamma + x * vp * x;
        let mean = mp + vp * x * (y - x * mp) / s;
        let var = vp - vp * x * x * vp / s;
        assert!((post.mean[0] - mean).abs() < 1e-14);
        assert!((post.cov[(0, 0)] - var).abs() < 1e-14);
    }

    #[test]
    fn state_space_lambda_zero_is_batch() {
        let ds = Dataset::new(
            2,
            vec![
                Observation::new(0.3, dvector![1.0, 2.0]),
                Observation::new(-1.0, dvector![0.5, -1.0]),
                Observation::new(2.0, dvector![0.0, 1.0]),
            ],
        )
        .unwrap();
        let m0 = dvector![0.1, 0.2];
        let v0 = dmatrix![1.0, 0.2; 0.2, 2.0];
        let reg = QuadraticRegularizer::ridge(2, 0.0).unwrap();
        let a = state_space_posterior(&m0, &v0, &ds, 0.7, &reg).unwrap();
        let b = batch_posterior(&m0, &v0, &ds, 0.7).unwrap();
        assert!((a.mean - b.mean).amax() < 1e-12);
        assert!((a.cov - b.cov).amax() < 1e-12);
    }

    #[test]
    fn numeric_prox_zero_loss_returns_anchor() {
        let anchor = dvector![0.3, -2.0];
        let zero = FnSmooth {
            value: |_: &DVector<f64>| 0.0,
            gradient: |t: &DVector<f64>| DVector::zeros(t.len()),
        };
        let out = numeric_prox(&anchor, &dmatrix![1.0, 0.0; 0.0, 3.0], &zero, 2.0).unwrap();
        assert!((out - anchor).amax() < 1e-14);
    }

    fn quadratic_loss(x: DVector<f64>, y: f64) -> impl SmoothFunction {
        let xg = x.clone();
        FnSmooth {
            value: move |t: &DVector<f64>| 0.5 * (y - x.dot(t)).powi(2),
            gradient: move |t: &DVector<f64>| &xg * -(y - xg.dot(t)),
        }
    }

    #[test]
    fn numeric_prox_matches_closed_form() {
        let anchor = dvector![0.5, -0.5, 1.0];
        let metric = dmatrix![2.0, 0.3, 0.0; 0.3, 1.0, -0.2; 0.0, -0.2, 0.7];
        let x = dvector![1.0, -1.0, 0.5];
        let loss = quadratic_loss(x.clone(), 1.2);
        let numeric = numeric_prox(&anchor, &metric, &loss, 0.8).unwrap();
        let closed =
            prox_quadratic_metric(&anchor, &metric, &Observation::new(1.2, x), 0.8).unwrap();
        assert!((numeric - closed).amax() < 1e-8);
    }

    #[test]
    fn numeric_prox_anisotropic_metric_matches_linear_solve() {
        let anchor = dvector![1.0, 2.0];
        let metric = dmatrix![1.0, 0.0; 0.0, 4.0];
        let (x, y, gamma) = (dvector![1.0, 1.0], 0.5, 2.0);
        let loss = quadratic_loss(x.clone(), y);
        let numeric = numeric_prox(&anchor, &metric, &loss, gamma).unwrap();
        // (V^{-1} + gamma x x^T) theta = V^{-1} anchor + gamma x y
        let lhs = dmatrix![1.0 + gamma, gamma; gamma, 0.25 + gamma];
        let rhs = dvector![anchor[0] + gamma * y, 0.25 * anchor[1] + gamma * y];
        let direct = lhs.lu().solve(&rhs).unwrap();
        assert!((numeric - direct).amax() < 1e-8);
    }

    #[test]
    fn finite_differences_of_simple_functions() {
        let theta = dvector![0.3, -1.2, 2.0];
        let g = finite_difference_gradient(&|_| 4.0, &theta, 1e-6).unwrap();
        assert_eq!(g, DVector::zeros(3));
        let g = finite_difference_gradient(&|t| 0.5 * t.dot(t), &theta, 1e-6).unwrap();
        assert!((g - &theta).amax() < 1e-6);
        let h = finite_difference_hessian(&|t| t.clone(), &theta, 1e-6).unwrap();
        assert!((h - DMatrix::identity(3, 3)).amax() < 1e-6);
        let err = finite_difference_gradient(&|t| 1.0 / t[0], &dvector![0.0], 1e-6);
        assert!(err.is_ok()); // +-1e6 is finite
        let err = finite_difference_gradient(&|t| t[0].ln(), &dvector![0.0], 1e-6);
        assert!(matches!(err, Err(PipgError::NumericInput(_))));
    }
}
