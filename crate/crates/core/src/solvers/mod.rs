//! Iteration drivers: PIPG (exact linear-quadratic path and EKF path) and
//! the IPG and SGD baselines. Every driver returns a [`Trace`].

mod baselines;
mod config;
mod pipg;
mod trace;

pub use baselines::{run_ipg, run_sgd};
pub use config::{BaselineConfig, PriorCovariance, SolverConfig, StepSchedule, TraceConfig};
pub use pipg::{
    pipg_step_general, pipg_step_linear, run_pipg, run_pipg_with_observer, StepObserver,
};
pub use trace::{CovSnapshot, Trace, TraceRecord};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Visiting order for each pass: the identity order, or one fresh
/// permutation per pass drawn from a ChaCha8 stream seeded with `seed`.
pub(crate) struct PassOrder {
    rng: Option<ChaCha8Rng>,
    order: Vec<usize>,
}

impl PassOrder {
    pub(crate) fn new(n: usize, shuffle: bool, seed: u64) -> Self {
        Self {
            rng: shuffle.then(|| ChaCha8Rng::seed_from_u64(seed)),
            order: (0..n).collect(),
        }
    }

    pub(crate) fn next_pass(&mut self) -> &[usize] {
        if let Some(rng) = self.rng.as_mut() {
            self.order.sort_unstable();
            self.order.shuffle(rng);
        }
        &self.order
    }
}
