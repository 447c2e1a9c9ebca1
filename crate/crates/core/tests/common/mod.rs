#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pipg::{Dataset, Observation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// `B B^T / d + floor I`, well conditioned for small d.
pub fn random_spd(rng: &mut ChaCha8Rng, d: usize, floor: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    &b * b.transpose() / d as f64 + DMatrix::identity(d, d) * floor
}

pub fn random_dataset(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Dataset {
    let truth = normal_vec(rng, d);
    let obs = (0..n)
        .map(|_| {
            let x = normal_vec(rng, d);
            let y = x.dot(&truth) + rng.sample::<f64, _>(StandardNormal);
            Observation::new(y, x)
        })
        .collect();
    Dataset::new(d, obs).unwrap()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}
