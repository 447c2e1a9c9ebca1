//! Regularizers `g`, observation models `h_k`, the metric proximal operator
//! for quadratic losses, and the maps that turn `g` into a PIPG transition.

mod observation;
mod prox;
mod regularizer;

pub use observation::{
    sigmoid, BoundObservation, LinearObservation, ObservationKind, ObservationModel,
    SigmoidLinearObservation,
};
pub use prox::{prox_quadratic_identity, prox_quadratic_metric};
pub use regularizer::{
    gradient_step_map, transition_matrix, QuadraticRegularizer, Regularizer,
    SmoothedL2L1Regularizer, ZeroRegularizer,
};
