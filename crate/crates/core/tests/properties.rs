//! Property tests for the Kalman kernels and the prox identity.

mod common;

use common::{min_eigenvalue, normal_vec, random_spd, rng};
use nalgebra::{DMatrix, DVector};
use pipg::kalman::{
    predict, rank_one_update, symmetrize, MeasurementLinearization, PosteriorState,
};
use pipg::models::prox_quadratic_metric;
use pipg::Observation;
use proptest::prelude::*;
use rand::Rng;

fn arb_case() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 1usize..=6, 0.01f64..10.0)
}

fn sample_state(seed: u64, d: usize) -> (rand_chacha::ChaCha8Rng, PosteriorState) {
    let mut r = rng(seed);
    let cov = random_spd(&mut r, d, 0.1);
    let mean = normal_vec(&mut r, d);
    (r, PosteriorState::new(mean, cov).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn update_never_increases_variance_along_direction((seed, d, gamma) in arb_case()) {
        let (mut r, state) = sample_state(seed, d);
        let dir = normal_vec(&mut r, d);
        let meas = MeasurementLinearization {
            direction: dir.clone(),
            predicted_output: r.random_range(-3.0..3.0),
            observed_output: r.random_range(-3.0..3.0),
            noise_precision: gamma,
        };
        let out = rank_one_update(&state, &meas).unwrap();
        let before = dir.dot(&(state.cov() * &dir));
        let after = dir.dot(&(out.cov() * &dir));
        prop_assert!(after <= before * (1.0 + 1e-12));
    }

    #[test]
    fn zero_residual_keeps_mean((seed, d, gamma) in arb_case()) {
        let (mut r, state) = sample_state(seed, d);
        let meas = MeasurementLinearization {
            direction: normal_vec(&mut r, d),
            predicted_output: 0.37,
            observed_output: 0.37,
            noise_precision: gamma,
        };
        let out = rank_one_update(&state, &meas).unwrap();
        prop_assert_eq!(out.mean(), state.mean());
    }

    #[test]
    fn update_matches_information_form((seed, d, gamma) in arb_case()) {
        let (mut r, state) = sample_state(seed, d);
        let dir = normal_vec(&mut r, d);
        let meas = MeasurementLinearization {
            direction: dir.clone(),
            predicted_output: 0.0,
            observed_output: 1.0,
            noise_precision: gamma,
        };
        let out = rank_one_update(&state, &meas).unwrap();
        let info = state.cov().clone().try_inverse().unwrap() + &dir * dir.transpose() * gamma;
        let expected = info.try_inverse().unwrap();
        let rel = (out.cov() - &expected).norm() / expected.norm();
        prop_assert!(rel < 1e-8, "relative error {}", rel);
    }

    #[test]
    fn prox_equals_kalman_mean((seed, d, gamma) in arb_case()) {
        let (mut r, state) = sample_state(seed, d);
        let x = normal_vec(&mut r, d);
        let y: f64 = r.random_range(-5.0..5.0);
        let prox = prox_quadratic_metric(state.mean(), state.cov(), &Observation::new(y, x.clone()), gamma).unwrap();
        let kalman = rank_one_update(&state, &MeasurementLinearization {
            predicted_output: x.dot(state.mean()),
            direction: x,
            observed_output: y,
            noise_precision: gamma,
        }).unwrap();
        prop_assert!((prox - kalman.mean()).amax() < 1e-10);
    }

    #[test]
    fn symmetrize_is_exactly_symmetric(seed in any::<u64>(), d in 1usize..8) {
        let mut r = rng(seed);
        let m = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
        let s = symmetrize(&m).unwrap();
        prop_assert_eq!(&s, &s.transpose());
        prop_assert_eq!(symmetrize(&s).unwrap(), s);
    }
}

#[test]
fn identity_prediction_is_noop() {
    let (_, state) = sample_state(3, 5);
    let out = predict(&state, &DMatrix::identity(5, 5), &DMatrix::zeros(5, 5)).unwrap();
    assert_eq!(out, state);
}

#[test]
fn long_interleaved_sequence_stays_psd() {
    let mut r = rng(17);
    let d = 6;
    let mut state = PosteriorState::new(DVector::zeros(d), random_spd(&mut r, d, 0.5)).unwrap();
    let q = DMatrix::identity(d, d) * 1e-4;
    let mut worst = f64::INFINITY;
    for k in 0..10_000 {
        if k % 2 == 0 {
            let t = DMatrix::identity(d, d) - random_spd(&mut r, d, 0.0) * 0.01;
            state = predict(&state, &t, &q).unwrap();
        } else {
            let meas = MeasurementLinearization {
                direction: normal_vec(&mut r, d) * 3.0,
                predicted_output: 0.0,
                observed_output: r.random_range(-1.0..1.0),
                noise_precision: 50.0,
            };
            state = rank_one_update(&state, &meas).unwrap();
        }
        assert_eq!(state.cov(), &state.cov().transpose());
        if k % 100 == 0 {
            worst = worst.min(min_eigenvalue(state.cov()));
        }
    }
    worst = worst.min(min_eigenvalue(state.cov()));
    assert!(worst >= -1e-10, "min eigenvalue {worst}");
}
