use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite_vec, ensure_square, PipgError, Result};

/// A twice-differentiable penalty `g`.
pub trait Regularizer: Send + Sync {
    fn value(&self, theta: &DVector<f64>) -> f64;

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64>;

    /// Dense Hessian. Always symmetric.
    fn hessian(&self, theta: &DVector<f64>) -> DMatrix<f64>;

    /// The Hessian's diagonal when the Hessian is known to be diagonal at
    /// every point. Lets [`transition_matrix`] avoid a dense product.
    fn hessian_diagonal(&self, _theta: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    /// Parameter dimension, when the regularizer fixes one.
    fn dim(&self) -> Option<usize> {
        None
    }

    /// `Some` when `g` is the quadratic `1/2 |A theta|^2`, which makes the
    /// gradient step linear.
    fn as_quadratic(&self) -> Option<&QuadraticRegularizer> {
        None
    }
}

/// `g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroRegularizer;

impl Regularizer for ZeroRegularizer {
    fn value(&self, _theta: &DVector<f64>) -> f64 {
        0.0
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(theta.len())
    }

    fn hessian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(theta.len(), theta.len())
    }

    fn hessian_diagonal(&self, theta: &DVector<f64>) -> Option<DVector<f64>> {
        Some(DVector::zeros(theta.len()))
    }
}

/// `g(theta) = 1/2 |A theta|^2` with a known `A` (m x d).
#[derive(Debug, Clone)]
pub struct QuadraticRegularizer {
    a: DMatrix<f64>,
    gram: DMatrix<f64>,
    gram_diagonal: Option<DVector<f64>>,
}

impl QuadraticRegularizer {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(PipgError::InvalidArgument(
                "regularizer matrix must be non-empty".into(),
            ));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(PipgError::NumericInput(
                "regularizer matrix has non-finite entries".into(),
            ));
        }
        let gram = a.transpose() * &a;
        let d = gram.nrows();
        let is_diagonal = (0..d).all(|j| (0..d).all(|i| i == j || gram[(i, j)] == 0.0));
        let gram_diagonal = is_diagonal.then(|| gram.diagonal());
        Ok(Self {
            a,
            gram,
            gram_diagonal,
        })
    }

    /// Ridge penalty: `A = sqrt(lambda) I`, i.e. `g = lambda/2 |theta|^2`.
    pub fn ridge(dim: usize, lambda: f64) -> Result<Self> {
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(PipgError::InvalidArgument(format!(
                "ridge strength must be >= 0, got {lambda}"
            )));
        }
        Self::new(DMatrix::identity(dim, dim) * lambda.sqrt())
    }

    pub fn a_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// `A^T A`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }
}

impl Regularizer for QuadraticRegularizer {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        0.5 * (&self.a * theta).norm_squared()
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.gram * theta
    }

    fn hessian(&self, _theta: &DVector<f64>) -> DMatrix<f64> {
        self.gram.clone()
    }

    fn hessian_diagonal(&self, _theta: &DVector<f64>) -> Option<DVector<f64>> {
        self.gram_diagonal.clone()
    }

    fn dim(&self) -> Option<usize> {
        Some(self.a.ncols())
    }

    fn as_quadratic(&self) -> Option<&QuadraticRegularizer> {
        Some(self)
    }
}

/// Smoothed l2-l1 penalty `lambda * sum_i (sqrt(1 + theta_i^2 / delta^2) - 1)`.
///
/// Each term vanishes at zero so `g(0) = 0`; as `delta -> 0` the penalty
/// approaches a scaled l1 norm.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedL2L1Regularizer {
    strength: f64,
    smoothing: f64,
}

impl SmoothedL2L1Regularizer {
    pub fn new(strength: f64, smoothing: f64) -> Result<Self> {
        if strength <= 0.0 || !strength.is_finite() {
            return Err(PipgError::InvalidArgument(format!(
                "smoothed l2-l1 strength must be positive, got {strength}"
            )));
        }
        if smoothing <= 0.0 || !smoothing.is_finite() {
            return Err(PipgError::InvalidArgument(format!(
                "smoothed l2-l1 smoothing must be positive, got {smoothing}"
            )));
        }
        Ok(Self {
            strength,
            smoothing,
        })
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    fn radial(&self, t: f64) -> f64 {
        let r = t / self.smoothing;
        (1.0 + r * r).sqrt()
    }
}

impl Regularizer for SmoothedL2L1Regularizer {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        self.strength * theta.iter().map(|&t| self.radial(t) - 1.0).sum::<f64>()
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        let scale = self.strength / (self.smoothing * self.smoothing);
        theta.map(|t| scale * t / self.radial(t))
    }

    fn hessian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.hessian_diagonal(theta).expect("diagonal hessian"))
    }

    fn hessian_diagonal(&self, theta: &DVector<f64>) -> Option<DVector<f64>> {
        let scale = self.strength / (self.smoothing * self.smoothing);
        Some(theta.map(|t| scale / self.radial(t).powi(3)))
    }
}

fn check_map_inputs(
    theta: &DVector<f64>,
    metric: &DMatrix<f64>,
    gamma: f64,
    reg: &dyn Regularizer,
) -> Result<()> {
    let d = theta.len();
    ensure_square(metric, d, "metric")?;
    if let Some(rd) = reg.dim() {
        if rd != d {
            return Err(PipgError::InvalidArgument(format!(
                "regularizer dimension {rd} does not match parameter dimension {d}"
            )));
        }
    }
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(PipgError::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

/// Variable-metric gradient step on `g`: `theta - gamma V grad g(theta)`.
pub fn gradient_step_map(
    theta: &DVector<f64>,
    metric: &DMatrix<f64>,
    gamma: f64,
    reg: &dyn Regularizer,
) -> Result<DVector<f64>> {
    check_map_inputs(theta, metric, gamma, reg)?;
    let grad = reg.gradient(theta);
    ensure_finite_vec(&grad, "regularizer gradient")?;
    let mut out = theta.clone();
    out.gemv(-gamma, metric, &grad, 1.0);
    Ok(out)
}

/// Jacobian of [`gradient_step_map`] with the metric held fixed:
/// `I - gamma V hess g(theta)`.
pub fn transition_matrix(
    theta: &DVector<f64>,
    metric: &DMatrix<f64>,
    gamma: f64,
    reg: &dyn Regularizer,
) -> Result<DMatrix<f64>> {
    check_map_inputs(theta, metric, gamma, reg)?;
    let d = theta.len();
    let mut out = match reg.hessian_diagonal(theta) {
        Some(diag) => {
            let mut scaled = metric.clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col *= -gamma * diag[j];
            }
            scaled
        }
        None => metric * reg.hessian(theta) * (-gamma),
    };
    for i in 0..d {
        out[(i, i)] += 1.0;
    }
    Ok(out)
}
