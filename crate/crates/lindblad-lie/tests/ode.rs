//! Integrator checks against closed-form solutions: order of accuracy,
//! dense-output fidelity, and failure modes.

use lindblad_lie::ode::{integrate, OdeConfig};
use lindblad_lie::{C64, Error};
use ndarray::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn exponential_decay_matches_closed_form() {
    let y0 = array![c(1.0, 0.0)];
    let cfg = OdeConfig { rtol: 1e-10, atol: 1e-13, ..Default::default() };
    let dense = integrate(|_t, y| y.mapv(|z| -z), 0.0, 5.0, &y0, &cfg).unwrap();
    for &t in &[0.0, 0.3, 1.0, 2.5, 4.99, 5.0] {
        let got = dense.eval(t).unwrap()[0];
        let want = (-t).exp();
        assert!((got.re - want).abs() < 1e-9, "t={t} got {} want {want}", got.re);
        assert!(got.im.abs() < 1e-12);
    }
}

#[test]
fn rotation_preserves_norm_and_phase() {
    // dy/dt = i w y, solution e^{iwt}.
    let w = 3.0;
    let y0 = array![c(1.0, 0.0)];
    let cfg = OdeConfig { rtol: 1e-11, atol: 1e-14, ..Default::default() };
    let dense = integrate(|_t, y| y.mapv(|z| c(0.0, w) * z), 0.0, 10.0, &y0, &cfg).unwrap();
    for &t in &[1.0, 4.0, 10.0] {
        let got = dense.eval(t).unwrap()[0];
        let want = c(0.0, w * t).exp();
        assert!((got - want).norm() < 1e-8, "t={t}");
    }
}

#[test]
fn time_dependent_rate_integrates_exactly_known_case() {
    // dy/dt = -2t y, solution exp(-t^2).
    let y0 = array![c(1.0, 0.0)];
    let cfg = OdeConfig { rtol: 1e-10, atol: 1e-13, ..Default::default() };
    let dense = integrate(|t, y| y.mapv(|z| z * (-2.0 * t)), 0.0, 3.0, &y0, &cfg).unwrap();
    for &t in &[0.5, 1.0, 2.0, 3.0] {
        let got = dense.eval(t).unwrap()[0].re;
        let want = (-t * t).exp();
        assert!((got - want).abs() < 1e-9 * want.max(1e-3), "t={t}");
    }
}

#[test]
fn dense_output_is_accurate_between_steps() {
    // Harmonic oscillator as a 2-vector; compare interpolated values on a
    // fine grid against the closed form.
    let y0 = array![c(1.0, 0.0), c(0.0, 0.0)];
    let cfg = OdeConfig::default();
    let dense = integrate(
        |_t, y| array![y[1], -y[0]],
        0.0,
        20.0,
        &y0,
        &cfg,
    )
    .unwrap();
    let mut worst = 0.0f64;
    for k in 0..=2000 {
        let t = 20.0 * k as f64 / 2000.0;
        let got = dense.eval(t).unwrap();
        let err = (got[0].re - t.cos()).abs().max((got[1].re + t.sin()).abs());
        worst = worst.max(err);
    }
    assert!(worst < 1e-7, "worst dense-output error {worst:.3e}");
}

#[test]
fn tightening_tolerance_reduces_error() {
    let y0 = array![c(1.0, 0.0)];
    let run = |rtol: f64| -> f64 {
        let cfg = OdeConfig { rtol, atol: rtol * 1e-3, ..Default::default() };
        let dense = integrate(|_t, y| y.mapv(|z| -z), 0.0, 4.0, &y0, &cfg).unwrap();
        (dense.eval(4.0).unwrap()[0].re - (-4.0f64).exp()).abs()
    };
    let coarse = run(1e-5);
    let fine = run(1e-10);
    assert!(fine < coarse * 1e-2, "coarse {coarse:.3e} fine {fine:.3e}");
    assert!(fine < 1e-11);
}

#[test]
fn empty_window_returns_initial_state() {
    let y0 = array![c(2.0, -1.0)];
    let dense = integrate(|_t, y| y.to_owned(), 1.5, 1.5, &y0, &OdeConfig::default()).unwrap();
    assert_eq!(dense.eval(1.5).unwrap()[0], c(2.0, -1.0));
}

#[test]
fn eval_outside_window_is_rejected() {
    let y0 = array![c(1.0, 0.0)];
    let dense = integrate(|_t, y| y.mapv(|z| -z), 0.0, 1.0, &y0, &OdeConfig::default()).unwrap();
    assert!(dense.eval(1.5).is_err());
    assert!(dense.eval(-0.5).is_err());
}

#[test]
fn reversed_window_is_rejected() {
    let y0 = array![c(1.0, 0.0)];
    assert!(matches!(
        integrate(|_t, y| y.to_owned(), 1.0, 0.0, &y0, &OdeConfig::default()),
        Err(Error::InvalidParams { .. })
    ));
}

#[test]
fn step_budget_is_enforced() {
    let y0 = array![c(1.0, 0.0)];
    let cfg = OdeConfig { rtol: 1e-12, atol: 1e-14, max_steps: 3, ..Default::default() };
    let res = integrate(|_t, y| y.mapv(|z| c(0.0, 50.0) * z), 0.0, 100.0, &y0, &cfg);
    assert!(matches!(res, Err(Error::IntegrationFailure { .. })));
}
