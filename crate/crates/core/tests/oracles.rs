mod common;

use common::*;
use num_complex::Complex64;
use rand::Rng;
use robh2::lft::discretize::zoh;
use robh2::linalg::{eye, freq_response, h2_norm_discrete, sigma_max_complex, zeros, Mat};
use robh2::sdp::SolverOptions;
use robh2::simulation::{estimate_induced_gain, frequency_grid};
use robh2::synthesis::{analyze_robust_h2, synthesize_gs, synthesize_sf};
use robh2::{close_output_feedback, close_state_feedback, open_loop, LftPlant, PlantDims, UncertaintyStructure};

fn opts() -> SolverOptions {
    SolverOptions::default()
}

/// `exp(A t)` and `int_0^t exp(A s) ds B` by their power series.
fn zoh_series(a: &Mat, b: &Mat, ts: f64) -> (Mat, Mat) {
    let n = a.nrows();
    let (mut ad, mut gamma) = (eye(n), eye(n) * ts);
    let mut term = eye(n);
    for k in 1..40 {
        term = &term * a * (ts / k as f64);
        ad += &term;
        gamma += &term * (ts / (k + 1) as f64);
    }
    (ad, gamma * b)
}

#[test]
fn zoh_matches_power_series() {
    let mut rng = rng(11);
    for _ in 0..20 {
        let n = rng.random_range(1..=5);
        let a = gaussian(&mut rng, n, n);
        let b = gaussian(&mut rng, n, 2);
        let (ad, bd) = zoh(&a, &b, 0.05).unwrap();
        let (ad2, bd2) = zoh_series(&a, &b, 0.05);
        assert!((&ad - &ad2).abs().max() < 1e-12, "{ad} vs {ad2}");
        assert!((&bd - &bd2).abs().max() < 1e-12, "{bd} vs {bd2}");
    }
}

fn nominal_h2(plant: &LftPlant, k: &robh2::LftController) -> f64 {
    let clp = close_output_feedback(plant, k).unwrap();
    h2_norm_discrete(&clp.a, &clp.b1, &clp.c1, &clp.d11).unwrap()
}

/// Without uncertainty and with `A = 0` the gain-scheduled bound is the
/// optimal output-feedback H2 norm.
#[test]
fn gs_without_uncertainty_or_dynamics_is_lqg() {
    let mut rng = rng(12);
    for i in 0..5 {
        let mut plant = random_lft_plant(&mut rng, 3, 0);
        plant.a *= 0.0;
        let oracle = nominal_h2(&plant, &lqg_predictor(&plant));
        let r = synthesize_gs(&plant, &opts()).unwrap();
        assert!(rel_diff(r.gamma, oracle) < 1e-5, "plant {i}: {} vs {oracle}", r.gamma);
    }
}

/// With dynamics the shared slack makes the bound conservative, but it
/// still bounds the optimum from above and the controller it returns is
/// close to optimal.
#[test]
fn gs_without_uncertainty_bounds_lqg() {
    let mut rng = rng(12);
    for i in 0..5 {
        let plant = random_lft_plant(&mut rng, 3, 0);
        let oracle = nominal_h2(&plant, &lqg_predictor(&plant));
        let r = synthesize_gs(&plant, &opts()).unwrap();
        let achieved = nominal_h2(&plant, &r.controller);
        assert!(achieved >= oracle * (1.0 - 1e-6), "plant {i}: {achieved} beats the optimum {oracle}");
        assert!(achieved <= r.gamma * (1.0 + 1e-6), "plant {i}: achieved {achieved} above bound {}", r.gamma);
        assert!(achieved <= oracle * 1.05, "plant {i}: achieved {achieved} vs optimum {oracle}");
    }
}

#[test]
fn state_feedback_bound_dominates_analysis() {
    let mut rng = rng(13);
    for i in 0..6 {
        let plant = random_lft_plant(&mut rng, 3, 2);
        let Ok(sf) = synthesize_sf(&plant, &opts()) else { continue };
        let clp = close_state_feedback(&plant, &sf.f).unwrap();
        let cert = analyze_robust_h2(&clp, &opts()).unwrap();
        assert!(cert.gamma <= sf.gamma * (1.0 + 1e-4), "plant {i}: {} > {}", cert.gamma, sf.gamma);
    }
}

/// `x+ = B0 p + B1 d + B2 u` with `B2 = 0`: nothing to control and no
/// dynamics, so the state-feedback and analysis bounds coincide.
#[test]
fn state_feedback_equals_analysis_without_dynamics_or_control() {
    let mut rng = rng(14);
    for i in 0..5 {
        let n = rng.random_range(1..=3);
        let np = rng.random_range(1..=2);
        let dims = PlantDims { n, np, nd: 1, ne: n, nu: 1, ny: 1 };
        let mut p = LftPlant::zeros(dims, random_structure(&mut rng, np), 1.0);
        p.b0 = gaussian(&mut rng, n, np) * 0.4;
        p.c0 = gaussian(&mut rng, np, n) * 0.4;
        p.b1 = gaussian(&mut rng, n, 1);
        p.c1 = eye(n);
        let sf = synthesize_sf(&p, &opts()).unwrap();
        let cert = analyze_robust_h2(&open_loop(&p).unwrap(), &opts()).unwrap();
        assert!(rel_diff(sf.gamma, cert.gamma) < 1e-4, "plant {i}: {} vs {}", sf.gamma, cert.gamma);
    }
}

#[test]
fn shrinking_uncertainty_does_not_raise_gamma() {
    let mut rng = rng(15);
    for i in 0..10 {
        let mut p = random_lft_plant(&mut rng, 3, 2);
        if p.dims.np == 0 {
            continue;
        }
        let radius = rng.random_range(0.2..0.8);
        p.a = with_radius(&mut rng, p.dims.n, radius);
        let Ok(full) = analyze_robust_h2(&open_loop(&p).unwrap(), &opts()) else { continue };
        p.b0 *= 0.5;
        let half = analyze_robust_h2(&open_loop(&p).unwrap(), &opts()).unwrap();
        assert!(half.gamma <= full.gamma * (1.0 + 1e-5), "plant {i}: {} > {}", half.gamma, full.gamma);
    }
}

#[test]
fn induced_gain_at_one_point_is_the_frozen_sweep() {
    let mut rng = rng(16);
    let dims = PlantDims { n: 3, np: 1, nd: 2, ne: 2, nu: 1, ny: 1 };
    let mut p = LftPlant::zeros(dims, UncertaintyStructure::scalar(&[1]).unwrap(), 1.0);
    p.a = with_radius(&mut rng, 3, 0.7);
    p.b0 = gaussian(&mut rng, 3, 1) * 0.2;
    p.c0 = gaussian(&mut rng, 1, 3) * 0.2;
    p.b1 = gaussian(&mut rng, 3, 2);
    p.c1 = gaussian(&mut rng, 2, 3);
    let clp = open_loop(&p).unwrap();
    let delta = Mat::from_element(1, 1, 0.6);
    let freqs = frequency_grid(64);
    let est = estimate_induced_gain(&clp, std::slice::from_ref(&delta), &freqs).unwrap();
    // Closed by hand: A + B0 delta C0 etc., since D00 = 0.
    let a = &p.a + &p.b0 * &delta * &p.c0;
    let c = &p.c1 + &p.d10 * &delta * &p.c0;
    let sweep = freqs
        .iter()
        .map(|&w| sigma_max_complex(&freq_response(&a, &p.b1, &c, &zeros(2, 2), Complex64::from_polar(1.0, w)).unwrap()))
        .fold(0.0, f64::max);
    assert!(rel_diff(est.value, sweep) < 1e-12, "{} vs {sweep}", est.value);
}
