//! Probabilistic incremental proximal gradient (PIPG) solvers.
//!
//! Minimizes `sum_k 1/2 (y_k - h_k(theta))^2 + g(theta)` one record at a
//! time by running Kalman (linear-quadratic case) or extended Kalman
//! (general case) recursions on a state-space model built from the cost.
//! The filter covariance serves as the variable metric and as an
//! uncertainty estimate for the solution.
//!
//! - [`kalman`]: prediction and rank-one update kernels.
//! - [`models`]: regularizers, observation maps and the metric prox.
//! - [`solvers`]: PIPG plus the IPG and SGD baselines.
//! - [`datagen`]: seeded synthetic problems and CSV exchange.
//! - [`oracle`]: brute-force references for testing.

pub mod data;
pub mod datagen;
mod error;
pub mod kalman;
pub mod models;
pub mod oracle;
pub mod solvers;

pub use data::{Dataset, Observation};
pub use error::{PipgError, Result};
pub use kalman::{MeasurementLinearization, PosteriorState};
