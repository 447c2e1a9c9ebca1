use nalgebra::DVector;

use crate::error::{PipgError, Result};

/// One record `(y_k, x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub regressor: DVector<f64>,
}

impl Observation {
    pub fn new(y: f64, regressor: DVector<f64>) -> Self {
        Self { y, regressor }
    }
}

/// An ordered, dimension-consistent sequence of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    observations: Vec<Observation>,
}

impl Dataset {
    /// Validates that every regressor has length `dim` and all values are finite.
    pub fn new(dim: usize, observations: Vec<Observation>) -> Result<Self> {
        if dim == 0 {
            return Err(PipgError::InvalidArgument(
                "dataset dimension must be at least 1".into(),
            ));
        }
        for (k, obs) in observations.iter().enumerate() {
            if obs.regressor.len() != dim {
                return Err(PipgError::InvalidArgument(format!(
                    "observation {k} has regressor length {}, expected {dim}",
                    obs.regressor.len()
                )));
            }
            if !obs.y.is_finite() || obs.regressor.iter().any(|v| !v.is_finite()) {
                return Err(PipgError::NumericInput(format!(
                    "observation {k} has non-finite values"
                )));
            }
        }
        Ok(Self { dim, observations })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation> {
        self.observations.iter()
    }

    /// Returns a copy with the records reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            dim: self.dim,
            observations: order
                .iter()
                .map(|&i| self.observations[i].clone())
                .collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Observation;
    type IntoIter = std::slice::Iter<'a, Observation>;

    fn into_iter(self) -> Self::IntoIter {
        self.observations.iter()
    }
}
