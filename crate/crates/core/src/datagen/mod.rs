//! Seeded synthetic problems and the relative-error metric.
//!
//! All randomness comes from a [`ChaCha8Rng`] seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`, consumed in a fixed documented order,
//! so a given config reproduces bit-identical data.

mod csv_io;

pub use csv_io::{
    export_problem, import_dataset, import_ground_truth, read_dataset_csv, write_dataset_csv,
    GROUND_TRUTH_FILE,
};

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Observation};
use crate::error::{PipgError, Result};
use crate::models::sigmoid;

/// Linear-Gaussian regression problem `y_k = x_k^T theta* + eta_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeGenConfig {
    pub dimension: usize,
    pub count: usize,
    pub noise_variance: f64,
    pub seed: u64,
}

impl RidgeGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.count == 0 {
            return Err(PipgError::InvalidArgument(
                "dimension and count must be at least 1".into(),
            ));
        }
        if self.noise_variance <= 0.0 || !self.noise_variance.is_finite() {
            return Err(PipgError::InvalidArgument(format!(
                "noise variance must be positive, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// Sparse filter identification through a sigmoid, driven by an AR(1) input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ARGenConfig {
    /// Filter length `d`.
    pub dimension: usize,
    pub count: usize,
    /// AR(1) coefficient `a`, `|a| < 1`.
    pub ar_coefficient: f64,
    /// Output noise is `N(0, 1 / noise_precision)`.
    pub noise_precision: f64,
    /// Number of nonzero taps in `theta*`.
    pub sparsity: usize,
    pub seed: u64,
}

impl ARGenConfig {
    /// Nonzero tap count used when none is given: `max(1, floor(d / 10))`.
    pub fn default_sparsity(dimension: usize) -> usize {
        (dimension / 10).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.count == 0 {
            return Err(PipgError::InvalidArgument(
                "dimension and count must be at least 1".into(),
            ));
        }
        if self.ar_coefficient.is_nan() || self.ar_coefficient.abs() >= 1.0 {
            return Err(PipgError::InvalidArgument(format!(
                "AR coefficient must satisfy |a| < 1, got {}",
                self.ar_coefficient
            )));
        }
        if self.noise_precision <= 0.0 || !self.noise_precision.is_finite() {
            return Err(PipgError::InvalidArgument(format!(
                "noise precision must be positive, got {}",
                self.noise_precision
            )));
        }
        if self.sparsity == 0 || self.sparsity > self.dimension {
            return Err(PipgError::InvalidArgument(format!(
                "sparsity must be in 1..={}, got {}",
                self.dimension, self.sparsity
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum GeneratorConfig {
    Ridge(RidgeGenConfig),
    SparseNonlinear(ARGenConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedProblem {
    pub dataset: Dataset,
    pub ground_truth: DVector<f64>,
    pub metadata: GeneratorConfig,
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Draws, in order: `theta*` (d standard normals), then for each record
/// its regressor (d standard normals) followed by its noise sample.
pub fn generate_ridge(cfg: &RidgeGenConfig) -> Result<GeneratedProblem> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_variance.sqrt())
        .map_err(|e| PipgError::InvalidArgument(e.to_string()))?;

    let truth = standard_normal_vec(&mut rng, cfg.dimension);
    let observations = (0..cfg.count)
        .map(|_| {
            let x = standard_normal_vec(&mut rng, cfg.dimension);
            let y = x.dot(&truth) + noise.sample(&mut rng);
            Observation::new(y, x)
        })
        .collect();

    Ok(GeneratedProblem {
        dataset: Dataset::new(cfg.dimension, observations)?,
        ground_truth: truth,
        metadata: GeneratorConfig::Ridge(*cfg),
    })
}

/// AR(1) input `x_k = a x_{k-1} + eta_k` (`x_0`, `eta_k` standard normal).
///
/// Returns the `n` samples `x_1..x_n`.
pub fn ar1_signal(rng: &mut ChaCha8Rng, a: f64, n: usize) -> Vec<f64> {
    let mut prev: f64 = rng.sample(StandardNormal);
    (0..n)
        .map(|_| {
            let eta: f64 = rng.sample(StandardNormal);
            prev = a * prev + eta;
            prev
        })
        .collect()
}

/// Length-`d` window ending at sample `k` (0-based), indices taken modulo the
/// signal length so the first windows wrap around to the end of the signal.
pub fn circulant_window(signal: &[f64], k: usize, d: usize) -> DVector<f64> {
    let n = signal.len() as isize;
    DVector::from_fn(d, |i, _| {
        let idx = (k as isize - (d - 1 - i) as isize).rem_euclid(n);
        signal[idx as usize]
    })
}

/// Draws, in order: the support of `theta*` (`sparsity` distinct indices),
/// the nonzero tap values (standard normal, in support order), the AR(1)
/// signal (`x_0` then `eta_1..eta_n`), then one output-noise sample per
/// record.
pub fn generate_sparse_nonlinear(cfg: &ARGenConfig) -> Result<GeneratedProblem> {
    cfg.validate()?;
    let d = cfg.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut truth = DVector::zeros(d);
    let mut support = sample(&mut rng, d, cfg.sparsity).into_vec();
    support.sort_unstable();
    for idx in support {
        truth[idx] = rng.sample(StandardNormal);
    }

    let signal = ar1_signal(&mut rng, cfg.ar_coefficient, cfg.count);
    let noise = Normal::new(0.0, cfg.noise_precision.recip().sqrt())
        .map_err(|e| PipgError::InvalidArgument(e.to_string()))?;

    let observations = (0..cfg.count)
        .map(|k| {
            let x = circulant_window(&signal, k, d);
            let y = sigmoid(x.dot(&truth)) + noise.sample(&mut rng);
            Observation::new(y, x)
        })
        .collect();

    Ok(GeneratedProblem {
        dataset: Dataset::new(d, observations)?,
        ground_truth: truth,
        metadata: GeneratorConfig::SparseNonlinear(*cfg),
    })
}

/// `|estimate - truth| / |truth|`.
pub fn relative_error(estimate: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(PipgError::InvalidArgument(format!(
            "estimate has length {}, truth has length {}",
            estimate.len(),
            truth.len()
        )));
    }
    let scale = truth.norm();
    if scale == 0.0 {
        return Err(PipgError::InvalidArgument("truth has zero norm".into()));
    }
    Ok((estimate - truth).norm() / scale)
}
