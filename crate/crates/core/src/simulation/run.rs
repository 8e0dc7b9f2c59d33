use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lft::closed_loop::ClosedLoopLft;
use crate::linalg::{eye, inverse_condition, max_abs, rows, zeros, Mat};

/// Largest condition number of `I - Delta D00` accepted at a step.
pub const ILL_POSED_COND: f64 = 1e12;

/// How `Delta(k)` evolves over a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaTrajectory {
    Constant {
        #[serde(with = "rows")]
        delta: Mat,
    },
    /// One matrix per step.
    Sequence {
        #[serde(skip)]
        deltas: Vec<Mat>,
    },
    /// Independent uniform structured samples each step.
    Random { seed: u64, bound: f64 },
}

impl DeltaTrajectory {
    pub fn zero(clp: &ClosedLoopLft) -> Self {
        DeltaTrajectory::Constant { delta: zeros(clp.np(), clp.np()) }
    }
}

/// Trajectories of one simulation. Row `k` of each matrix is time step `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationRun {
    pub horizon: usize,
    /// `horizon + 1` rows, starting with `x0`.
    #[serde(with = "rows")]
    pub states: Mat,
    #[serde(with = "rows")]
    pub outputs: Mat,
    #[serde(with = "rows")]
    pub inputs: Mat,
    pub delta: DeltaTrajectory,
    pub seed: Option<u64>,
}

/// Per-step update of the loop: `x+ = A x + B0 p + B1 d`, `e = C1 x + D10 p`.
pub(crate) struct Stepper<'a> {
    clp: &'a ClosedLoopLft,
    d00_zero: bool,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(clp: &'a ClosedLoopLft) -> Self {
        Self { clp, d00_zero: max_abs(&clp.d00) == 0.0 }
    }

    /// `p = (I - Delta D00)^-1 Delta C0 x`.
    pub(crate) fn loop_signal(&self, delta: &Mat, x: &Mat, step: usize) -> Result<Mat> {
        let dq = delta * (&self.clp.c0 * x);
        if self.d00_zero || dq.nrows() == 0 {
            return Ok(dq);
        }
        let m = eye(delta.nrows()) - delta * &self.clp.d00;
        let ratio = inverse_condition(&m);
        if !(ratio * ILL_POSED_COND > 1.0) {
            return Err(Error::IllPosedLoop { step, cond: 1.0 / ratio });
        }
        m.lu().solve(&dq).ok_or(Error::IllPosedLoop { step, cond: f64::INFINITY })
    }

    /// Advance one step; returns `(x+, e)`.
    pub(crate) fn step(&self, delta: &Mat, x: &Mat, d: &Mat, k: usize) -> Result<(Mat, Mat)> {
        let c = self.clp;
        let p = self.loop_signal(delta, x, k)?;
        let xn = &c.a * x + &c.b0 * &p + &c.b1 * d;
        let e = &c.c1 * x + &c.d10 * &p;
        Ok((xn, e))
    }
}

fn check_delta(clp: &ClosedLoopLft, delta: &Mat) -> Result<()> {
    let np = clp.np();
    if delta.shape() != (np, np) {
        return Err(Error::dims("Delta", format!("{np}x{np}"), format!("{}x{}", delta.nrows(), delta.ncols())));
    }
    Ok(())
}

/// Simulate `horizon` steps with disturbance rows `d` (`horizon x nd`).
pub fn simulate(
    clp: &ClosedLoopLft,
    delta: &DeltaTrajectory,
    d: &Mat,
    x0: &Mat,
    horizon: usize,
) -> Result<SimulationRun> {
    clp.check()?;
    let (n, nd, ne) = (clp.n(), clp.nd(), clp.ne());
    if d.shape() != (horizon, nd) {
        return Err(Error::dims("disturbance trajectory", format!("{horizon}x{nd}"), format!("{}x{}", d.nrows(), d.ncols())));
    }
    if x0.shape() != (n, 1) {
        return Err(Error::dims("x0", format!("{n}x1"), format!("{}x{}", x0.nrows(), x0.ncols())));
    }
    let mut rng = match delta {
        DeltaTrajectory::Random { seed, bound } => {
            if !(0.0..=1.0).contains(bound) {
                return Err(Error::InvalidArgument(format!("bound {bound} outside [0, 1]")));
            }
            Some(ChaCha8Rng::seed_from_u64(*seed))
        }
        DeltaTrajectory::Constant { delta } => {
            check_delta(clp, delta)?;
            None
        }
        DeltaTrajectory::Sequence { deltas } => {
            if deltas.len() < horizon {
                return Err(Error::dims("Delta sequence length", horizon, deltas.len()));
            }
            for m in deltas {
                check_delta(clp, m)?;
            }
            None
        }
    };
    let stepper = Stepper::new(clp);
    let mut states = zeros(horizon + 1, n);
    let mut outputs = zeros(horizon, ne);
    states.row_mut(0).copy_from(&x0.transpose());
    let mut x = x0.clone();
    for k in 0..horizon {
        let dk = Mat::from_iterator(d.ncols(), 1, d.row(k).iter().copied());
        let sampled;
        let dl = match delta {
            DeltaTrajectory::Constant { delta } => delta,
            DeltaTrajectory::Sequence { deltas } => &deltas[k],
            DeltaTrajectory::Random { bound, .. } => {
                sampled = clp.structure.sample_with(rng.as_mut().unwrap(), *bound);
                &sampled
            }
        };
        let (xn, e) = stepper.step(dl, &x, &dk, k)?;
        if !xn.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteResult(format!("state at step {}", k + 1)));
        }
        outputs.row_mut(k).copy_from(&e.transpose());
        states.row_mut(k + 1).copy_from(&xn.transpose());
        x = xn;
    }
    let seed = match delta {
        DeltaTrajectory::Random { seed, .. } => Some(*seed),
        _ => None,
    };
    Ok(SimulationRun { horizon, states, outputs, inputs: d.clone(), delta: delta.clone(), seed })
}

/// First step after which the Euclidean norm of the given columns of
/// `signal` stays below `fraction` of its peak; `None` if it never does
/// or the signal is identically zero.
pub fn settling_step(signal: &Mat, columns: std::ops::Range<usize>, fraction: f64) -> Option<usize> {
    let norms: Vec<f64> = (0..signal.nrows()).map(|k| signal.row(k).columns_range(columns.clone()).norm()).collect();
    let peak = norms.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let last_above = norms.iter().rposition(|v| *v >= fraction * peak)?;
    (last_above + 1 < norms.len()).then_some(last_above + 1)
}

/// CSV with header `k,d_1,..,d_nd,e_1,..,e_ne`.
pub fn write_csv<W: Write>(run: &SimulationRun, mut w: W) -> std::io::Result<()> {
    let nd = run.inputs.ncols();
    let ne = run.outputs.ncols();
    let mut header = vec!["k".to_string()];
    header.extend((1..=nd).map(|i| format!("d_{i}")));
    header.extend((1..=ne).map(|i| format!("e_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for k in 0..run.horizon {
        let mut line = k.to_string();
        for v in run.inputs.row(k).iter().chain(run.outputs.row(k).iter()) {
            line.push(',');
            line.push_str(&format!("{v:e}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lft::closed_loop::open_loop;
    use crate::lft::plant::{LftPlant, PlantDims};
    use crate::lft::structure::UncertaintyStructure;

    fn plant() -> ClosedLoopLft {
        let dims = PlantDims { n: 2, np: 1, nd: 1, ne: 1, nu: 1, ny: 1 };
        let mut p = LftPlant::zeros(dims, UncertaintyStructure::scalar(&[1]).unwrap(), 0.1);
        p.a = Mat::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        p.b0 = Mat::from_column_slice(2, 1, &[0.3, 0.1]);
        p.b1 = Mat::from_column_slice(2, 1, &[1.0, 0.5]);
        p.c0 = Mat::from_row_slice(1, 2, &[1.0, -1.0]);
        p.c1 = Mat::from_row_slice(1, 2, &[0.7, 1.0]);
        p.d00 = Mat::from_element(1, 1, 0.4);
        p.d10 = Mat::from_element(1, 1, 0.2);
        open_loop(&p).unwrap()
    }

    fn inputs(t: usize) -> Mat {
        Mat::from_fn(t, 1, |k, _| ((k * 7 % 11) as f64 - 5.0) * 0.1)
    }

    #[test]
    fn zero_delta_matches_convolution() {
        let c = plant();
        let t = 60;
        let d = inputs(t);
        let run = simulate(&c, &DeltaTrajectory::zero(&c), &d, &zeros(2, 1), t).unwrap();
        // e(k) = sum_{j<k} C A^{k-1-j} B d(j)
        let mut h = vec![0.0; t];
        let mut ap = eye(2);
        for v in h.iter_mut().skip(1) {
            *v = (&c.c1 * &ap * &c.b1)[(0, 0)];
            ap = &c.a * ap;
        }
        for k in 0..t {
            let conv: f64 = (0..k).map(|j| h[k - j] * d[(j, 0)]).sum();
            assert!((run.outputs[(k, 0)] - conv).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let c = plant();
        let run = simulate(&c, &DeltaTrajectory::Random { seed: 3, bound: 1.0 }, &zeros(40, 1), &zeros(2, 1), 40).unwrap();
        assert_eq!(max_abs(&run.outputs), 0.0);
    }

    #[test]
    fn constant_delta_matches_frozen_system() {
        let c = plant();
        let delta = Mat::from_element(1, 1, -0.8);
        let f = c.frozen(&delta).unwrap();
        let t = 50;
        let d = inputs(t);
        let run = simulate(&c, &DeltaTrajectory::Constant { delta }, &d, &zeros(2, 1), t).unwrap();
        let mut x = zeros(2, 1);
        for k in 0..t {
            let dk = Mat::from_iterator(d.ncols(), 1, d.row(k).iter().copied());
            let e = &f.c * &x + &f.d * &dk;
            assert!((run.outputs[(k, 0)] - e[(0, 0)]).abs() < 1e-9);
            x = &f.a * &x + &f.b * &dk;
        }
    }

    #[test]
    fn singular_loop_is_reported() {
        let mut c = plant();
        c.d00[(0, 0)] = 1.0;
        let r = simulate(&c, &DeltaTrajectory::Constant { delta: eye(1) }, &inputs(5), &Mat::from_element(2, 1, 1.0), 5);
        assert!(matches!(r, Err(Error::IllPosedLoop { step: 0, .. })), "{r:?}");
    }

    #[test]
    fn csv_header() {
        let c = plant();
        let run = simulate(&c, &DeltaTrajectory::zero(&c), &inputs(3), &zeros(2, 1), 3).unwrap();
        let mut buf = Vec::new();
        write_csv(&run, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "k,d_1,e_1");
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn settling_of_geometric_decay() {
        let sig = Mat::from_fn(50, 2, |k, j| if j == 0 { 0.8f64.powi(k as i32) } else { 0.0 });
        // 0.8^k < 0.05 first at k = 14
        assert_eq!(settling_step(&sig, 0..2, 0.05), Some(14));
        assert_eq!(settling_step(&zeros(5, 1), 0..1, 0.05), None);
        let flat = Mat::from_element(5, 1, 1.0);
        assert_eq!(settling_step(&flat, 0..1, 0.05), None);
    }
}
