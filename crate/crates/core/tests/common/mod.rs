#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use robh2::linalg::{eye, hcat, inverse, spectral_radius, vcat, zeros, Mat};
use robh2::{LftController, LftPlant, PlantDims, UncertaintyStructure};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng>(rng: &mut R, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Random matrix rescaled to spectral radius `radius`.
pub fn with_radius<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Mat {
    let a = gaussian(rng, n, n);
    let r = spectral_radius(&a);
    if r > 0.0 {
        a * (radius / r)
    } else {
        a
    }
}

/// `x+ = A x + B d`, `e = C x` with `rho(A) < 1`.
pub fn random_stable_lti<R: Rng>(rng: &mut R, n: usize, nd: usize, ne: usize) -> LftPlant {
    let dims = PlantDims { n, np: 0, nd, ne, nu: 1, ny: 1 };
    let mut p = LftPlant::zeros(dims, UncertaintyStructure::nominal(), 1.0);
    let radius = rng.random_range(0.1..0.9);
    p.a = with_radius(rng, n, radius);
    p.b1 = gaussian(rng, n, nd);
    p.c1 = gaussian(rng, ne, n);
    p
}

pub fn random_structure<R: Rng>(rng: &mut R, np: usize) -> UncertaintyStructure {
    match (np, rng.random_range(0..3)) {
        (0, _) => UncertaintyStructure::nominal(),
        (1, _) => UncertaintyStructure::scalar(&[1]).unwrap(),
        (_, 0) => UncertaintyStructure::scalar(&vec![1; np]).unwrap(),
        (_, 1) => UncertaintyStructure::scalar(&[np]).unwrap(),
        _ => UncertaintyStructure::new(vec![1; np - 1], vec![1]).unwrap(),
    }
}

/// Random LFT plant with moderate uncertainty, full state and control in
/// `e`, and measurement `y = C2 x + [0 I] d`.
pub fn random_lft_plant<R: Rng>(rng: &mut R, max_n: usize, max_np: usize) -> LftPlant {
    let n = rng.random_range(1..=max_n);
    let np = rng.random_range(0..=max_np);
    let nu = rng.random_range(1..=2);
    let ny = rng.random_range(1..=2);
    let nw = rng.random_range(1..=2);
    let nd = nw + ny;
    let ne = n + nu;
    let dims = PlantDims { n, np, nd, ne, nu, ny };
    let mut p = LftPlant::zeros(dims, random_structure(rng, np), 0.1);
    let radius = rng.random_range(0.5..1.1);
    p.a = with_radius(rng, n, radius);
    let small = 0.3;
    p.b0 = gaussian(rng, n, np) * small;
    p.c0 = gaussian(rng, np, n) * small;
    p.d00 = gaussian(rng, np, np) * 0.1;
    p.d02 = gaussian(rng, np, nu) * 0.1;
    p.d20 = gaussian(rng, ny, np) * 0.1;
    p.b1 = hcat(&[&gaussian(rng, n, nw), &zeros(n, ny)]);
    p.b2 = gaussian(rng, n, nu);
    p.c1 = vcat(&[&eye(n), &zeros(nu, n)]);
    p.d10 = vcat(&[&(gaussian(rng, n, np) * 0.1), &zeros(nu, np)]);
    p.d12 = vcat(&[&zeros(n, nu), &eye(nu)]);
    p.c2 = gaussian(rng, ny, n);
    p.d21 = hcat(&[&zeros(ny, nw), &eye(ny)]);
    p
}

/// Random controller shaped for `plant`, with its own random `np`.
pub fn random_controller<R: Rng>(rng: &mut R, plant: &LftPlant, nk: usize) -> LftController {
    let d = plant.dims;
    let mut k = LftController::zeros(nk, d.nu, d.ny, d.np);
    k.a_k = gaussian(rng, nk, nk) * 0.3;
    k.b_k1 = gaussian(rng, nk, d.ny);
    k.b_k0 = gaussian(rng, nk, d.np);
    k.c_k1 = gaussian(rng, d.nu, nk);
    k.c_k0 = gaussian(rng, d.np, nk);
    k.d_k10 = gaussian(rng, d.nu, d.np);
    k.d_k00 = gaussian(rng, d.np, d.np) * 0.1;
    k
}

/// Observability gramian by summing `A'^k C'C A^k` until the terms vanish.
pub fn gramian_by_summation(a: &Mat, c: &Mat) -> Mat {
    let mut w = zeros(a.nrows(), a.ncols());
    let mut term = c.transpose() * c;
    for _ in 0..100_000 {
        w += &term;
        let next = a.transpose() * &term * a;
        if next.abs().max() <= 1e-18 * w.abs().max().max(1e-300) {
            break;
        }
        term = next;
    }
    w
}

pub fn h2_by_summation(a: &Mat, b: &Mat, c: &Mat) -> f64 {
    (b.transpose() * gramian_by_summation(a, c) * b).trace().sqrt()
}

/// Stabilizing DARE solution by value iteration:
/// `X = A'XA + Q - (A'XB + S)(R + B'XB)^-1 (B'XA + S')`.
pub fn dare_by_iteration(a: &Mat, b: &Mat, q: &Mat, r: &Mat, s: &Mat) -> Mat {
    let mut x = q.clone();
    for _ in 0..200_000 {
        let g = r + b.transpose() * &x * b;
        let h = a.transpose() * &x * b + s;
        let next = a.transpose() * &x * a + q - &h * inverse(&g).unwrap() * h.transpose();
        let next = (&next + next.transpose()) * 0.5;
        let change = (&next - &x).abs().max();
        x = next;
        if change <= 1e-14 * x.abs().max().max(1.0) {
            break;
        }
    }
    x
}

/// One-step-predictor LQG controller, the H2-optimal strictly proper
/// controller of a nominal plant.
pub fn lqg_predictor(p: &LftPlant) -> LftController {
    let (a, b1, b2, c1, c2, d12, d21) = (&p.a, &p.b1, &p.b2, &p.c1, &p.c2, &p.d12, &p.d21);
    let x = dare_by_iteration(a, b2, &(c1.transpose() * c1), &(d12.transpose() * d12), &(c1.transpose() * d12));
    let gx = d12.transpose() * d12 + b2.transpose() * &x * b2;
    let f = -inverse(&gx).unwrap() * (b2.transpose() * &x * a + d12.transpose() * c1);
    let y = dare_by_iteration(
        &a.transpose(),
        &c2.transpose(),
        &(b1 * b1.transpose()),
        &(d21 * d21.transpose()),
        &(b1 * d21.transpose()),
    );
    let gy = d21 * d21.transpose() + c2 * &y * c2.transpose();
    let l = (a * &y * c2.transpose() + b1 * d21.transpose()) * inverse(&gy).unwrap();
    let mut k = LftController::zeros(p.dims.n, p.dims.nu, p.dims.ny, 0);
    k.a_k = a + b2 * &f - &l * c2;
    k.b_k1 = l;
    k.c_k1 = f;
    k
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
