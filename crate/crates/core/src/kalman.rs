//! Prediction and rank-one measurement-update kernels shared by every PIPG
//! variant.
//!
//! Every kernel is a pure function over owned or borrowed values and returns
//! a fresh [`PosteriorState`]. Covariances are re-symmetrized after each
//! mutation so that the rank-one downdates of a long run cannot drift away
//! from symmetry.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite_mat, ensure_finite_vec, ensure_square, PipgError, Result};

/// Smallest admissible innovation variance before an update is rejected.
const INNOVATION_FLOOR: f64 = 1e-300;

/// Gaussian belief over the parameter vector: a mean and a dense covariance.
///
/// Used both for filtered states and for their one-step predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl PosteriorState {
    /// Builds a state, checking shapes and finiteness and symmetrizing `cov`.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        ensure_square(&cov, mean.len(), "covariance")?;
        ensure_finite_vec(&mean, "mean")?;
        ensure_finite_mat(&cov, "covariance")?;
        let cov = symmetrize(&cov)?;
        Ok(Self { mean, cov })
    }

    /// Zero mean with covariance `scale * I`.
    pub fn isotropic(dim: usize, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(PipgError::InvalidArgument(format!(
                "prior scale must be positive and finite, got {scale}"
            )));
        }
        Self::new(DVector::zeros(dim), DMatrix::identity(dim, dim) * scale)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.mean, self.cov)
    }
}

/// One scalar measurement, linearized around the predicted mean.
#[derive(Debug, Clone)]
pub struct MeasurementLinearization {
    /// `x_k` for linear observations, `grad h_k` at the predicted mean otherwise.
    pub direction: DVector<f64>,
    /// Model output at the predicted mean.
    pub predicted_output: f64,
    /// The observed value `y_k`.
    pub observed_output: f64,
    /// Inverse observation-noise variance; must be positive.
    pub noise_precision: f64,
}

impl MeasurementLinearization {
    fn validate(&self, dim: usize) -> Result<()> {
        if self.direction.len() != dim {
            return Err(PipgError::InvalidArgument(format!(
                "measurement direction has length {}, state has dimension {dim}",
                self.direction.len()
            )));
        }
        ensure_finite_vec(&self.direction, "measurement direction")?;
        if !self.predicted_output.is_finite() || !self.observed_output.is_finite() {
            return Err(PipgError::NumericInput(format!(
                "measurement outputs must be finite (predicted {}, observed {})",
                self.predicted_output, self.observed_output
            )));
        }
        if self.noise_precision <= 0.0 || !self.noise_precision.is_finite() {
            return Err(PipgError::InvalidArgument(format!(
                "noise precision must be positive and finite, got {}",
                self.noise_precision
            )));
        }
        Ok(())
    }
}

/// Returns `(m + m^T) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(PipgError::InvalidArgument(format!(
            "cannot symmetrize a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut out = m.clone();
    symmetrize_in_place(&mut out);
    Ok(out)
}

// Averages mirrored entries; both halves receive the identical f64, so the
// result is exactly symmetric.
fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Covariance half of the prediction step: `T V T^T + Q`, symmetrized.
pub fn propagate_covariance(
    cov: &DMatrix<f64>,
    transition: &DMatrix<f64>,
    process_noise: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let d = cov.nrows();
    ensure_square(cov, d, "covariance")?;
    ensure_square(transition, d, "transition matrix")?;
    ensure_square(process_noise, d, "process noise")?;
    ensure_finite_mat(transition, "transition matrix")?;
    ensure_finite_mat(process_noise, "process noise")?;

    let mut out = transition * cov * transition.transpose();
    out += process_noise;
    symmetrize_in_place(&mut out);
    ensure_finite_mat(&out, "predicted covariance")?;
    Ok(out)
}

/// Linear prediction: mean `T m`, covariance `T V T^T + Q`.
pub fn predict(
    state: &PosteriorState,
    transition: &DMatrix<f64>,
    process_noise: &DMatrix<f64>,
) -> Result<PosteriorState> {
    let cov = propagate_covariance(&state.cov, transition, process_noise)?;
    let mean = transition * &state.mean;
    ensure_finite_vec(&mean, "predicted mean")?;
    Ok(PosteriorState { mean, cov })
}

/// Rank-one Kalman measurement update.
///
/// With `s = 1/gamma + d^T V d` and `w = V d`, returns
/// `m + w (y - yhat) / s` and `V - w w^T / s`.
pub fn rank_one_update(
    state: &PosteriorState,
    meas: &MeasurementLinearization,
) -> Result<PosteriorState> {
    meas.validate(state.dim())?;

    let gain_dir = &state.cov * &meas.direction;
    let innovation_var = meas.noise_precision.recip() + meas.direction.dot(&gain_dir);
    if innovation_var.is_nan() || innovation_var <= INNOVATION_FLOOR {
        return Err(PipgError::InternalInvariant(format!(
            "innovation variance {innovation_var} is not positive"
        )));
    }

    let residual = meas.observed_output - meas.predicted_output;
    let mean = &state.mean + &gain_dir * (residual / innovation_var);

    let mut cov = state.cov.clone();
    cov.ger(-innovation_var.recip(), &gain_dir, &gain_dir, 1.0);
    symmetrize_in_place(&mut cov);

    ensure_finite_vec(&mean, "updated mean")?;
    ensure_finite_mat(&cov, "updated covariance")?;
    Ok(PosteriorState { mean, cov })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn scalar_state(mean: f64, cov: f64) -> PosteriorState {
        PosteriorState::new(dvector![mean], dmatrix![cov]).unwrap()
    }

    #[test]
    fn predict_identity_is_noop() {
        let state = PosteriorState::new(
            dvector![1.0, -2.0, 0.5],
            dmatrix![2.0, 0.3, 0.0; 0.3, 1.0, 0.1; 0.0, 0.1, 0.5],
        )
        .unwrap();
        let out = predict(&state, &DMatrix::identity(3, 3), &DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(out, state);
    }

    #[test]
    fn predict_scalar_case() {
        let out = predict(&scalar_state(2.0, 1.0), &dmatrix![0.5], &dmatrix![0.01]).unwrap();
        assert!((out.mean()[0] - 1.0).abs() < 1e-15);
        assert!((out.cov()[(0, 0)] - 0.26).abs() < 1e-15);
    }

    #[test]
    fn predict_ridge_transition() {
        // (1 - gamma * lambda) I with gamma = 0.1, lambda = 0.01.
        let d = 4;
        let state = PosteriorState::isotropic(d, 1.0).unwrap();
        let t = DMatrix::identity(d, d) * (1.0 - 0.1 * 0.01);
        let out = predict(&state, &t, &DMatrix::zeros(d, d)).unwrap();
        let expected = DMatrix::identity(d, d) * 0.999f64.powi(2);
        assert!((out.cov() - expected).abs().max() < 1e-15);
    }

    #[test]
    fn predict_rejects_bad_shapes_and_nan() {
        let state = PosteriorState::isotropic(2, 1.0).unwrap();
        let err = predict(&state, &DMatrix::identity(3, 3), &DMatrix::zeros(2, 2)).unwrap_err();
        assert!(matches!(err, PipgError::InvalidArgument(_)));
        let mut t = DMatrix::identity(2, 2);
        t[(0, 1)] = f64::NAN;
        let err = predict(&state, &t, &DMatrix::zeros(2, 2)).unwrap_err();
        assert!(matches!(err, PipgError::NumericInput(_)));
    }

    #[test]
    fn update_scalar_case() {
        let meas = MeasurementLinearization {
            direction: dvector![1.0],
            predicted_output: 0.0,
            observed_output: 0.0,
            noise_precision: 1.0,
        };
        let out = rank_one_update(&scalar_state(0.0, 1.0), &meas).unwrap();
        assert_eq!(out.mean()[0], 0.0);
        assert!((out.cov()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_direction_leaves_state() {
        let state = PosteriorState::new(dvector![1.0, 2.0], dmatrix![1.0, 0.2; 0.2, 3.0]).unwrap();
        let meas = MeasurementLinearization {
            direction: DVector::zeros(2),
            predicted_output: 0.3,
            observed_output: 5.0,
            noise_precision: 2.0,
        };
        assert_eq!(rank_one_update(&state, &meas).unwrap(), state);
    }

    #[test]
    fn update_rejects_nonpositive_precision() {
        let meas = MeasurementLinearization {
            direction: dvector![1.0],
            predicted_output: 0.0,
            observed_output: 0.0,
            noise_precision: 0.0,
        };
        let err = rank_one_update(&scalar_state(0.0, 1.0), &meas).unwrap_err();
        assert!(matches!(err, PipgError::InvalidArgument(_)));
    }

    #[test]
    fn update_rejects_nan_observation() {
        let meas = MeasurementLinearization {
            direction: dvector![1.0],
            predicted_output: 0.0,
            observed_output: f64::NAN,
            noise_precision: 1.0,
        };
        let err = rank_one_update(&scalar_state(0.0, 1.0), &meas).unwrap_err();
        assert!(matches!(err, PipgError::NumericInput(_)));
    }

    #[test]
    fn degenerate_innovation_is_internal_error() {
        // A negative-definite covariance can cancel the noise term.
        let state = PosteriorState {
            mean: dvector![0.0],
            cov: dmatrix![-1.0],
        };
        let meas = MeasurementLinearization {
            direction: dvector![1.0],
            predicted_output: 0.0,
            observed_output: 1.0,
            noise_precision: 1.0,
        };
        let err = rank_one_update(&state, &meas).unwrap_err();
        assert!(matches!(err, PipgError::InternalInvariant(_)));
    }

    #[test]
    fn symmetrize_examples() {
        let s = dmatrix![2.0, 0.5; 0.5, 1.0];
        assert_eq!(symmetrize(&s).unwrap(), s);
        assert_eq!(
            symmetrize(&dmatrix![1.0, 2.0; 0.0, 1.0]).unwrap(),
            dmatrix![1.0, 1.0; 1.0, 1.0]
        );

        let mut m = DMatrix::from_fn(5, 5, |i, j| ((i * 5 + j) as f64).sin());
        m = &m + m.transpose();
        m[(1, 3)] += 1e-15;
        let out = symmetrize(&m).unwrap();
        assert_eq!((&out - out.transpose()).abs().max(), 0.0);

        assert!(symmetrize(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn state_constructor_validates() {
        assert!(PosteriorState::new(dvector![1.0, 2.0], DMatrix::identity(3, 3)).is_err());
        assert!(PosteriorState::new(dvector![f64::INFINITY], dmatrix![1.0]).is_err());
        assert!(PosteriorState::isotropic(2, 0.0).is_err());
    }
}
