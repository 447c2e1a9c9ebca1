//! Linear-quadratic PIPG against the brute-force posteriors.

mod common;

use common::{normal_vec, random_dataset, random_spd, rng};
use nalgebra::{DMatrix, DVector};
use pipg::kalman::{rank_one_update, MeasurementLinearization, PosteriorState};
use pipg::models::{prox_quadratic_metric, ObservationKind, QuadraticRegularizer, ZeroRegularizer};
use pipg::oracle::{batch_posterior, state_space_posterior};
use pipg::solvers::{run_pipg, PriorCovariance, SolverConfig};
use pipg::Observation;
use rand::seq::SliceRandom;
use rand::Rng;

fn cfg(gamma: f64, v0: f64) -> SolverConfig {
    SolverConfig {
        gamma,
        prior: PriorCovariance::Scaled(v0),
        ..SolverConfig::default()
    }
}

#[test]
fn sequential_updates_match_batch_posterior() {
    let mut r = rng(1);
    let (d, n, gamma) = (4, 20, 2.0);
    let ds = random_dataset(&mut r, d, n);
    let v0 = random_spd(&mut r, d, 0.5);
    let m0 = normal_vec(&mut r, d);

    let mut state = PosteriorState::new(m0.clone(), v0.clone()).unwrap();
    for obs in &ds {
        let meas = MeasurementLinearization {
            direction: obs.regressor.clone(),
            predicted_output: obs.regressor.dot(state.mean()),
            observed_output: obs.y,
            noise_precision: gamma,
        };
        state = rank_one_update(&state, &meas).unwrap();
    }
    let oracle = batch_posterior(&m0, &v0, &ds, gamma).unwrap();
    assert!((state.mean() - &oracle.mean).amax() < 1e-8);
    assert!((state.cov() - &oracle.cov).amax() < 1e-8);
}

#[test]
fn one_pass_matches_state_space_oracle_d5_n50() {
    let mut r = rng(2);
    let ds = random_dataset(&mut r, 5, 50);
    let reg = QuadraticRegularizer::ridge(5, 0.01).unwrap();
    let c = cfg(0.1, 1.0);
    let trace = run_pipg(&ds, ObservationKind::Linear, &reg, &c, None).unwrap();
    let post = trace.posterior.unwrap();
    let oracle =
        state_space_posterior(&DVector::zeros(5), &DMatrix::identity(5, 5), &ds, 0.1, &reg)
            .unwrap();
    assert!((post.mean() - &oracle.mean).amax() < 1e-8);
    assert!((post.cov() - &oracle.cov).amax() < 1e-8);
}

#[test]
fn exactness_across_grid() {
    let mut r = rng(3);
    for &lambda in &[0.0, 1e-2, 1.0] {
        for &gamma in &[0.01, 0.1] {
            let d = r.random_range(1..=6);
            let n = r.random_range(1..=60);
            let ds = random_dataset(&mut r, d, n);
            let reg = QuadraticRegularizer::ridge(d, lambda).unwrap();
            let trace =
                run_pipg(&ds, ObservationKind::Linear, &reg, &cfg(gamma, 1.0), None).unwrap();
            let post = trace.posterior.unwrap();
            let oracle = state_space_posterior(
                &DVector::zeros(d),
                &DMatrix::identity(d, d),
                &ds,
                gamma,
                &reg,
            )
            .unwrap();
            assert!(
                (post.mean() - &oracle.mean).amax() < 1e-8,
                "lambda {lambda} gamma {gamma}"
            );
            assert!(
                (post.cov() - &oracle.cov).amax() < 1e-8,
                "lambda {lambda} gamma {gamma}"
            );
        }
    }
}

#[test]
fn dense_quadratic_regularizer_exactness() {
    let mut r = rng(4);
    let d = 4;
    let a = DMatrix::from_fn(2, d, |_, _| 0.3 * r.random::<f64>());
    let reg = QuadraticRegularizer::new(a).unwrap();
    let ds = random_dataset(&mut r, d, 40);
    let v0 = random_spd(&mut r, d, 0.5);
    let m0 = normal_vec(&mut r, d);
    let c = SolverConfig {
        gamma: 0.1,
        prior: PriorCovariance::Full(v0.clone()),
        initial_mean: Some(m0.clone()),
        ..SolverConfig::default()
    };
    let post = run_pipg(&ds, ObservationKind::Linear, &reg, &c, None)
        .unwrap()
        .posterior
        .unwrap();
    let oracle = state_space_posterior(&m0, &v0, &ds, 0.1, &reg).unwrap();
    assert!((post.mean() - &oracle.mean).amax() < 1e-8);
    assert!((post.cov() - &oracle.cov).amax() < 1e-8);
}

#[test]
fn reduction_chain_lambda_zero() {
    let mut r = rng(5);
    let (d, n, gamma) = (5, 40, 0.1);
    let ds = random_dataset(&mut r, d, n);
    let reg = QuadraticRegularizer::ridge(d, 0.0).unwrap();
    let pipg = run_pipg(&ds, ObservationKind::Linear, &reg, &cfg(gamma, 1.0), None)
        .unwrap()
        .posterior
        .unwrap();
    let zero_reg = run_pipg(
        &ds,
        ObservationKind::Linear,
        &ZeroRegularizer,
        &cfg(gamma, 1.0),
        None,
    )
    .unwrap()
    .posterior
    .unwrap();
    let batch = batch_posterior(&DVector::zeros(d), &DMatrix::identity(d, d), &ds, gamma).unwrap();
    assert!((pipg.mean() - &batch.mean).amax() < 1e-8);
    assert!((pipg.cov() - &batch.cov).amax() < 1e-8);
    assert!((zero_reg.mean() - pipg.mean()).amax() < 1e-12);
}

#[test]
fn lambda_zero_posterior_is_order_invariant() {
    let mut r = rng(6);
    let (d, n, gamma) = (4, 50, 0.1);
    let ds = random_dataset(&mut r, d, n);
    let reg = QuadraticRegularizer::ridge(d, 0.0).unwrap();
    let base = run_pipg(&ds, ObservationKind::Linear, &reg, &cfg(gamma, 1.0), None)
        .unwrap()
        .posterior
        .unwrap();
    for seed in 0..5 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng(100 + seed));
        let shuffled = ds.permuted(&order);
        let post = run_pipg(
            &shuffled,
            ObservationKind::Linear,
            &reg,
            &cfg(gamma, 1.0),
            None,
        )
        .unwrap()
        .posterior
        .unwrap();
        assert!((post.mean() - base.mean()).amax() < 1e-8);
        assert!((post.cov() - base.cov()).amax() < 1e-8);
        let batch = batch_posterior(
            &DVector::zeros(d),
            &DMatrix::identity(d, d),
            &shuffled,
            gamma,
        )
        .unwrap();
        assert!((batch.mean - base.mean()).amax() < 1e-8);
    }
}

#[test]
fn shuffled_run_is_deterministic_and_exact() {
    let mut r = rng(7);
    let ds = random_dataset(&mut r, 3, 30);
    let reg = QuadraticRegularizer::ridge(3, 0.0).unwrap();
    let c = SolverConfig {
        gamma: 0.1,
        shuffle: true,
        seed: 99,
        ..SolverConfig::default()
    };
    let a = run_pipg(&ds, ObservationKind::Linear, &reg, &c, None).unwrap();
    let b = run_pipg(&ds, ObservationKind::Linear, &reg, &c, None).unwrap();
    assert_eq!(a, b);
    let batch = batch_posterior(&DVector::zeros(3), &DMatrix::identity(3, 3), &ds, 0.1).unwrap();
    let post = a.posterior.unwrap();
    assert!((post.mean() - &batch.mean).amax() < 1e-8);
}

#[test]
fn prox_equals_kalman_update_d3() {
    let mut r = rng(8);
    let anchor = normal_vec(&mut r, 3);
    let v = random_spd(&mut r, 3, 0.3);
    let x = normal_vec(&mut r, 3);
    let obs = Observation::new(r.sample(rand_distr::StandardNormal), x.clone());
    let gamma = 0.7;
    let prox = prox_quadratic_metric(&anchor, &v, &obs, gamma).unwrap();
    let kalman = rank_one_update(
        &PosteriorState::new(anchor.clone(), v).unwrap(),
        &MeasurementLinearization {
            direction: x.clone(),
            predicted_output: x.dot(&anchor),
            observed_output: obs.y,
            noise_precision: gamma,
        },
    )
    .unwrap();
    assert!((prox - kalman.mean()).amax() < 1e-10);
}
