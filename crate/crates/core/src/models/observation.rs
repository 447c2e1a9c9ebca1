use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// A scalar observation map `h_k` with its gradient.
pub trait ObservationModel {
    fn value(&self, theta: &DVector<f64>) -> f64;

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64>;

    fn value_and_gradient(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.value(theta), self.gradient(theta))
    }
}

/// `h_k(theta) = x_k^T theta`.
#[derive(Debug, Clone, Copy)]
pub struct LinearObservation<'a> {
    regressor: &'a DVector<f64>,
}

impl<'a> LinearObservation<'a> {
    pub fn new(regressor: &'a DVector<f64>) -> Self {
        Self { regressor }
    }
}

impl ObservationModel for LinearObservation<'_> {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        self.regressor.dot(theta)
    }

    fn gradient(&self, _theta: &DVector<f64>) -> DVector<f64> {
        self.regressor.clone()
    }
}

/// Logistic function, evaluated without overflow for large `|u|`.
pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `h_k(theta) = sigmoid(x_k^T theta)`.
#[derive(Debug, Clone, Copy)]
pub struct SigmoidLinearObservation<'a> {
    regressor: &'a DVector<f64>,
}

impl<'a> SigmoidLinearObservation<'a> {
    pub fn new(regressor: &'a DVector<f64>) -> Self {
        Self { regressor }
    }
}

impl ObservationModel for SigmoidLinearObservation<'_> {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        sigmoid(self.regressor.dot(theta))
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.value_and_gradient(theta).1
    }

    fn value_and_gradient(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let s = self.value(theta);
        (s, self.regressor * (s * (1.0 - s)))
    }
}

/// Family of observation maps, instantiated per record from its regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationKind {
    Linear,
    Sigmoid,
}

impl ObservationKind {
    pub fn bind<'a>(&self, regressor: &'a DVector<f64>) -> BoundObservation<'a> {
        match self {
            ObservationKind::Linear => BoundObservation::Linear(LinearObservation::new(regressor)),
            ObservationKind::Sigmoid => {
                BoundObservation::Sigmoid(SigmoidLinearObservation::new(regressor))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum BoundObservation<'a> {
    Linear(LinearObservation<'a>),
    Sigmoid(SigmoidLinearObservation<'a>),
}

impl ObservationModel for BoundObservation<'_> {
    fn value(&self, theta: &DVector<f64>) -> f64 {
        match self {
            BoundObservation::Linear(m) => m.value(theta),
            BoundObservation::Sigmoid(m) => m.value(theta),
        }
    }

    fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self {
            BoundObservation::Linear(m) => m.gradient(theta),
            BoundObservation::Sigmoid(m) => m.gradient(theta),
        }
    }

    fn value_and_gradient(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        match self {
            BoundObservation::Linear(m) => m.value_and_gradient(theta),
            BoundObservation::Sigmoid(m) => m.value_and_gradient(theta),
        }
    }
}
