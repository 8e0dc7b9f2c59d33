use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::run::{simulate, DeltaTrajectory, SimulationRun, Stepper};
use crate::error::{Error, Result};
use crate::lft::closed_loop::{ClosedLoopLft, FrozenLti};
use crate::linalg::{freq_response, sigma_max_complex, spectral_radius, zeros, Mat};

pub const DEFAULT_FREQUENCIES: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GainKind {
    WhiteNoiseRms,
    /// Worst case over frozen `Delta` only; the time-varying gain can be larger.
    InducedL2LowerBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GainEstimate {
    pub value: f64,
    pub kind: GainKind,
    pub standard_error: Option<f64>,
    /// Monte Carlo runs, or frozen parameter points.
    pub samples: usize,
    /// Time steps per run after burn-in, or frequencies per point.
    pub points: usize,
    /// `Delta` attaining the induced-gain maximum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_delta: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WhiteNoiseOptions {
    pub runs: usize,
    pub horizon: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for WhiteNoiseOptions {
    fn default() -> Self {
        Self { runs: 64, horizon: 4096, burn_in: 512, seed: 0 }
    }
}

/// Mean of `e'e` over one run after burn-in.
fn white_noise_run(clp: &ClosedLoopLft, opts: &WhiteNoiseOptions, index: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ index as u64);
    let stepper = Stepper::new(clp);
    let (n, nd) = (clp.n(), clp.nd());
    let mut x = zeros(n, 1);
    let mut acc = 0.0;
    for k in 0..opts.horizon {
        let delta = clp.structure.sample_with(&mut rng, 1.0);
        let d = Mat::from_fn(nd, 1, |_, _| StandardNormal.sample(&mut rng));
        let (xn, e) = stepper.step(&delta, &x, &d, k)?;
        if !xn.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteResult(format!("state at step {} of run {index}", k + 1)));
        }
        if k >= opts.burn_in {
            acc += e.norm_squared();
        }
        x = xn;
    }
    Ok(acc / (opts.horizon - opts.burn_in) as f64)
}

/// RMS output under unit white noise with `Delta(k)` drawn independently
/// each step. Runs use seeds `seed ^ index` and are reduced in index order,
/// so the result does not depend on the number of worker threads.
pub fn estimate_h2_white_noise(clp: &ClosedLoopLft, opts: &WhiteNoiseOptions) -> Result<GainEstimate> {
    clp.check()?;
    if opts.runs < 2 || opts.horizon <= opts.burn_in {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 runs and horizon > burn-in (runs {}, horizon {}, burn-in {})",
            opts.runs, opts.horizon, opts.burn_in
        )));
    }
    let powers: Vec<f64> = (0..opts.runs)
        .into_par_iter()
        .map(|i| white_noise_run(clp, opts, i))
        .collect::<Result<Vec<f64>>>()?;
    let r = powers.len() as f64;
    let mean = powers.iter().sum::<f64>() / r;
    let var = powers.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    let value = mean.sqrt();
    // Delta method for the square root of the mean power.
    let se = if value > 0.0 { (var / r).sqrt() / (2.0 * value) } else { 0.0 };
    Ok(GainEstimate {
        value,
        kind: GainKind::WhiteNoiseRms,
        standard_error: Some(se),
        samples: opts.runs,
        points: opts.horizon - opts.burn_in,
        worst_delta: None,
    })
}

/// `count` log-spaced frequencies in `(0, pi]`, ending at `pi`.
pub fn frequency_grid(count: usize) -> Vec<f64> {
    let lo = (std::f64::consts::PI * 1e-6).ln();
    let hi = std::f64::consts::PI.ln();
    match count {
        0 => vec![],
        1 => vec![std::f64::consts::PI],
        _ => (0..count)
            .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
            .collect(),
    }
}

/// Tensor grid of frozen `Delta`: `points` values in `[-1, 1]` for every
/// scalar block, and `t I` for every full block.
pub fn parameter_grid(clp: &ClosedLoopLft, points: usize) -> Result<Vec<Mat>> {
    let st = &clp.structure;
    let axes = st.scalar_blocks.len() + st.full_blocks.len();
    let values: Vec<f64> = match points {
        0 => return Err(Error::InvalidArgument("grid needs at least one point".into())),
        1 => vec![0.0],
        _ => (0..points).map(|i| -1.0 + 2.0 * i as f64 / (points - 1) as f64).collect(),
    };
    let total = values.len().checked_pow(axes as u32).filter(|t| *t <= 1_000_000).ok_or_else(|| {
        Error::InvalidArgument(format!("{points} points on {axes} axes is too many grid points"))
    })?;
    let mut grid = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut coords = Vec::with_capacity(axes);
        for _ in 0..axes {
            coords.push(values[idx % values.len()]);
            idx /= values.len();
        }
        let (s, f) = coords.split_at(st.scalar_blocks.len());
        let fulls: Vec<Mat> = f.iter().zip(&st.full_blocks).map(|(t, r)| Mat::identity(*r, *r) * *t).collect();
        grid.push(st.assemble_delta(s, &fulls)?);
    }
    Ok(grid)
}

fn stable_frozen(clp: &ClosedLoopLft, delta: &Mat) -> Result<FrozenLti> {
    let f = clp.frozen(delta)?;
    let radius = spectral_radius(&f.a);
    if !(radius < 1.0) {
        return Err(Error::UnstableFrozenLoop { radius, delta: delta.diagonal().iter().copied().collect() });
    }
    Ok(f)
}

/// Largest singular value of the frozen `d -> e` response over the grid.
pub fn estimate_induced_gain(clp: &ClosedLoopLft, grid: &[Mat], freqs: &[f64]) -> Result<GainEstimate> {
    clp.check()?;
    if grid.is_empty() || freqs.is_empty() {
        return Err(Error::InvalidArgument("empty parameter or frequency grid".into()));
    }
    let mut best = -1.0;
    let mut worst = None;
    for delta in grid {
        let f = stable_frozen(clp, delta)?;
        for &w in freqs {
            let z = Complex64::from_polar(1.0, w);
            let h = freq_response(&f.a, &f.b, &f.c, &f.d, z)
                .ok_or_else(|| Error::NonFiniteResult(format!("frequency response at omega = {w}")))?;
            let s = sigma_max_complex(&h);
            if s > best {
                best = s;
                worst = Some(delta.diagonal().iter().copied().collect());
            }
        }
    }
    Ok(GainEstimate {
        value: best,
        kind: GainKind::InducedL2LowerBound,
        standard_error: None,
        samples: grid.len(),
        points: freqs.len(),
        worst_delta: worst,
    })
}

/// Steps of `magnitude` and opposite signs on the first two disturbance
/// channels (a single channel gets the positive step) under constant
/// `delta`, starting from rest.
pub fn step_disturbance_response(
    clp: &ClosedLoopLft,
    delta: &Mat,
    magnitude: f64,
    horizon: usize,
) -> Result<SimulationRun> {
    clp.check()?;
    stable_frozen(clp, delta)?;
    let nd = clp.nd();
    let d = Mat::from_fn(horizon, nd, |_, j| match j {
        0 => magnitude,
        1 => -magnitude,
        _ => 0.0,
    });
    simulate(clp, &DeltaTrajectory::Constant { delta: delta.clone() }, &d, &zeros(clp.n(), 1), horizon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lft::closed_loop::open_loop;
    use crate::lft::plant::{LftPlant, PlantDims};
    use crate::lft::structure::UncertaintyStructure;

    fn scalar(a: f64, c: f64) -> ClosedLoopLft {
        let dims = PlantDims { n: 1, np: 0, nd: 1, ne: 1, nu: 1, ny: 1 };
        let mut p = LftPlant::zeros(dims, UncertaintyStructure::nominal(), 1.0);
        p.a[(0, 0)] = a;
        p.b1[(0, 0)] = 1.0;
        p.c1[(0, 0)] = c;
        open_loop(&p).unwrap()
    }

    #[test]
    fn white_noise_scalar_matches_stationary_variance() {
        let est = estimate_h2_white_noise(&scalar(0.5, 1.0), &WhiteNoiseOptions::default()).unwrap();
        let exact = (4.0f64 / 3.0).sqrt();
        let se = est.standard_error.unwrap();
        assert!((est.value - exact).abs() <= 3.0 * se, "{} vs {exact} (se {se})", est.value);
        assert!(se / exact < 0.02);
    }

    #[test]
    fn white_noise_zero_output() {
        let est = estimate_h2_white_noise(&scalar(0.5, 0.0), &WhiteNoiseOptions { runs: 4, horizon: 200, burn_in: 10, seed: 1 })
            .unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn white_noise_is_deterministic_across_pools() {
        let c = scalar(0.8, 1.0);
        let o = WhiteNoiseOptions { runs: 8, horizon: 300, burn_in: 20, seed: 7 };
        let a = estimate_h2_white_noise(&c, &o).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| estimate_h2_white_noise(&c, &o)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn induced_gain_scalar_peak_at_dc() {
        let c = scalar(0.5, 1.0);
        let mut freqs = frequency_grid(DEFAULT_FREQUENCIES);
        freqs.insert(0, 1e-12);
        let g = estimate_induced_gain(&c, &[zeros(0, 0)], &freqs).unwrap();
        assert!((g.value - 2.0).abs() < 1e-9, "{}", g.value);
    }

    #[test]
    fn static_map_gain_is_sigma_max() {
        let mut c = scalar(0.0, 0.0);
        c.a = zeros(0, 0);
        c.b1 = zeros(0, 2);
        c.c1 = zeros(2, 0);
        c.c0 = zeros(0, 0);
        c.b0 = zeros(0, 0);
        c.d01 = zeros(0, 2);
        c.d11 = Mat::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        c.d10 = zeros(2, 0);
        let g = estimate_induced_gain(&c, &[zeros(0, 0)], &frequency_grid(8)).unwrap();
        assert!((g.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn step_response_reaches_dc_gain() {
        let c = scalar(0.5, 1.0);
        let run = step_disturbance_response(&c, &zeros(0, 0), 0.3, 200).unwrap();
        assert!((run.outputs[(199, 0)] - 0.6).abs() < 1e-6);
        let zero = step_disturbance_response(&c, &zeros(0, 0), 0.0, 20).unwrap();
        assert!(zero.outputs.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unstable_frozen_loop_is_reported() {
        let r = step_disturbance_response(&scalar(1.2, 1.0), &zeros(0, 0), 1.0, 10);
        assert!(matches!(r, Err(Error::UnstableFrozenLoop { .. })));
    }

    #[test]
    fn parameter_grid_counts() {
        let dims = PlantDims { n: 1, np: 2, nd: 1, ne: 1, nu: 1, ny: 1 };
        let p = LftPlant::zeros(dims, UncertaintyStructure::scalar(&[1, 1]).unwrap(), 1.0);
        let g = parameter_grid(&open_loop(&p).unwrap(), 3).unwrap();
        assert_eq!(g.len(), 9);
        assert!(g.iter().any(|d| d[(0, 0)] == -1.0 && d[(1, 1)] == 1.0));
    }
}
