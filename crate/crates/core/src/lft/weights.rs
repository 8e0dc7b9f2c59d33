//! LTI weighting filters and their interconnection with an LFT plant.

use std::ops::Range;

use num_complex::Complex64;

use super::plant::{check_plant, LftPlant, PlantDims};
use crate::error::{Error, Result};
use crate::linalg::{blkdiag, eye, grid, hcat, max_abs, vcat, zeros, CMat, Mat};

/// State-space system `x+ = A x + B u, y = C x + D u` (or its
/// continuous-time analogue when `sample_time == 0`).
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
    pub sample_time: f64,
}

impl StateSpace {
    /// Static gain `k I_size`.
    pub fn gain(k: f64, size: usize) -> Self {
        Self {
            a: zeros(0, 0),
            b: zeros(0, size),
            c: zeros(size, 0),
            d: eye(size) * k,
            sample_time: 0.0,
        }
    }

    /// Continuous-time SISO realization of `num(s)/den(s)`, coefficients
    /// in descending powers. First-order sections are realized with
    /// `|b| = |c|`, which balances their gramians.
    pub fn from_tf(num: &[f64], den: &[f64]) -> Result<Self> {
        let num = strip(num);
        let den = strip(den);
        if den.is_empty() {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        if num.len() > den.len() {
            return Err(Error::ImproperWeight(format!("{num:?} / {den:?}")));
        }
        let order = den.len() - 1;
        let lead = den[0];
        let den: Vec<f64> = den.iter().map(|v| v / lead).collect();
        // pad numerator to the denominator length
        let mut nm = vec![0.0; den.len() - num.len()];
        nm.extend(num.iter().map(|v| v / lead));
        let d = nm[0];
        if order == 0 {
            return Ok(Self::gain(d, 1));
        }
        // strictly proper remainder coefficients, descending from s^{order-1}
        let rem: Vec<f64> = (1..=order).map(|i| nm[i] - d * den[i]).collect();
        let mut a = zeros(order, order);
        for j in 0..order {
            a[(0, j)] = -den[j + 1];
        }
        for i in 1..order {
            a[(i, i - 1)] = 1.0;
        }
        let mut b = zeros(order, 1);
        let mut c = zeros(1, order);
        b[(0, 0)] = 1.0;
        for j in 0..order {
            c[(0, j)] = rem[j];
        }
        if order == 1 && rem[0] != 0.0 {
            let s = rem[0].abs().sqrt();
            b[(0, 0)] = s;
            c[(0, 0)] = rem[0] / s;
        }
        Ok(Self { a, b, c, d: Mat::from_element(1, 1, d), sample_time: 0.0 })
    }

    /// Block-diagonal (parallel, decoupled) combination.
    pub fn diag(systems: &[StateSpace]) -> Self {
        let pick = |f: fn(&StateSpace) -> &Mat| -> Mat { blkdiag(&systems.iter().map(f).collect::<Vec<_>>()) };
        Self {
            a: pick(|s| &s.a),
            b: pick(|s| &s.b),
            c: pick(|s| &s.c),
            d: pick(|s| &s.d),
            sample_time: systems.first().map_or(0.0, |s| s.sample_time),
        }
    }

    /// `k` decoupled copies, `W I_k`.
    pub fn repeat(&self, k: usize) -> Self {
        Self::diag(&vec![self.clone(); k])
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.d.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.d.nrows()
    }

    /// `C (sI - A)^{-1} B + D` at a point of the complex plane.
    pub fn eval(&self, s: Complex64) -> Option<CMat> {
        crate::linalg::freq_response(&self.a, &self.b, &self.c, &self.d, s)
    }
}

fn strip(p: &[f64]) -> Vec<f64> {
    p.iter().skip_while(|v| **v == 0.0).copied().collect()
}

/// Where a weight sits relative to the plant.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightPlacement {
    /// In series with the control input: the plant sees `W u`.
    Actuator,
    /// Filters performance outputs `e[rows]`, replacing them with `W e[rows]`.
    Performance { rows: Range<usize> },
    /// Appends `W u` to the performance outputs.
    ControlEffort,
    /// New disturbance inputs `n`; the measurement becomes `y + W n`.
    SensorNoise,
    /// New disturbance inputs `a`; the plant input becomes `u + W a`.
    InputDisturbance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    pub name: String,
    pub system: StateSpace,
    pub placement: WeightPlacement,
}

impl Weight {
    pub fn new(name: &str, system: StateSpace, placement: WeightPlacement) -> Self {
        Self { name: name.into(), system, placement }
    }
}

/// Interconnect `plant` with `weights`, applied in order, each referring to
/// the channels of the plant built so far. Weight states are appended after
/// the plant states in the same order. The uncertainty channel is untouched.
pub fn augment_with_weights(plant: &LftPlant, weights: &[Weight]) -> Result<LftPlant> {
    check_plant(plant)?;
    let mut p = plant.clone();
    for w in weights {
        if w.system.sample_time != p.sample_time {
            return Err(Error::TopologyMismatch(format!(
                "weight `{}` has sample time {} but the plant has {}",
                w.name, w.system.sample_time, p.sample_time
            )));
        }
        p = match &w.placement {
            WeightPlacement::Actuator => actuator(&p, w)?,
            WeightPlacement::Performance { rows } => performance(&p, w, rows.clone())?,
            WeightPlacement::ControlEffort => control_effort(&p, w)?,
            WeightPlacement::SensorNoise => sensor_noise(&p, w)?,
            WeightPlacement::InputDisturbance => input_disturbance(&p, w)?,
        };
        check_plant(&p)?;
    }
    Ok(p)
}

fn mismatch(w: &Weight, what: &str, expected: usize, found: usize) -> Error {
    Error::TopologyMismatch(format!("weight `{}`: {what} must be {expected}, found {found}", w.name))
}

/// Append `k` zero columns (new states) to a matrix.
fn pad_cols(m: &Mat, k: usize) -> Mat {
    hcat(&[m, &zeros(m.nrows(), k)])
}

fn pad_rows(m: &Mat, k: usize) -> Mat {
    vcat(&[m, &zeros(k, m.ncols())])
}

fn actuator(p: &LftPlant, w: &Weight) -> Result<LftPlant> {
    let s = &w.system;
    let nu = p.dims.nu;
    if s.inputs() != nu || s.outputs() != nu {
        return Err(mismatch(w, "input and output count", nu, s.inputs().max(s.outputs())));
    }
    let k = s.order();
    let mut q = p.clone();
    q.dims.n += k;
    q.a = grid(&[vec![&p.a, &(&p.b2 * &s.c)], vec![&zeros(k, p.dims.n), &s.a]]);
    q.b0 = pad_rows(&p.b0, k);
    q.b1 = pad_rows(&p.b1, k);
    q.b2 = vcat(&[&(&p.b2 * &s.d), &s.b]);
    q.c0 = hcat(&[&p.c0, &(&p.d02 * &s.c)]);
    q.c1 = hcat(&[&p.c1, &(&p.d12 * &s.c)]);
    q.c2 = pad_cols(&p.c2, k);
    q.d02 = &p.d02 * &s.d;
    q.d12 = &p.d12 * &s.d;
    Ok(q)
}

fn performance(p: &LftPlant, w: &Weight, rows: Range<usize>) -> Result<LftPlant> {
    let s = &w.system;
    let ne = p.dims.ne;
    if rows.start > rows.end || rows.end > ne {
        return Err(Error::TopologyMismatch(format!(
            "weight `{}`: rows {rows:?} out of range for {ne} performance outputs",
            w.name
        )));
    }
    if s.inputs() != rows.len() {
        return Err(mismatch(w, "input count", rows.len(), s.inputs()));
    }
    let (n, k) = (p.dims.n, s.order());
    let sel = |m: &Mat| m.rows(rows.start, rows.len()).into_owned();
    let (c1s, d10s, d12s) = (sel(&p.c1), sel(&p.d10), sel(&p.d12));
    let before = |m: &Mat| m.rows(0, rows.start).into_owned();
    let after = |m: &Mat| m.rows(rows.end, ne - rows.end).into_owned();

    let mut q = p.clone();
    q.dims.n += k;
    q.dims.ne = ne - rows.len() + s.outputs();
    q.a = grid(&[vec![&p.a, &zeros(n, k)], vec![&(&s.b * &c1s), &s.a]]);
    q.b0 = vcat(&[&p.b0, &(&s.b * &d10s)]);
    q.b1 = pad_rows(&p.b1, k);
    q.b2 = vcat(&[&p.b2, &(&s.b * &d12s)]);
    q.c0 = pad_cols(&p.c0, k);
    q.c2 = pad_cols(&p.c2, k);
    q.c1 = vcat(&[
        &pad_cols(&before(&p.c1), k),
        &hcat(&[&(&s.d * &c1s), &s.c]),
        &pad_cols(&after(&p.c1), k),
    ]);
    q.d10 = vcat(&[&before(&p.d10), &(&s.d * &d10s), &after(&p.d10)]);
    q.d12 = vcat(&[&before(&p.d12), &(&s.d * &d12s), &after(&p.d12)]);
    q.d11 = zeros(q.dims.ne, p.dims.nd);
    Ok(q)
}

fn control_effort(p: &LftPlant, w: &Weight) -> Result<LftPlant> {
    let s = &w.system;
    let PlantDims { n, nu, nd, .. } = p.dims;
    if s.inputs() != nu {
        return Err(mismatch(w, "input count", nu, s.inputs()));
    }
    let (k, m) = (s.order(), s.outputs());
    let mut q = p.clone();
    q.dims.n += k;
    q.dims.ne += m;
    q.a = blkdiag(&[&p.a, &s.a]);
    q.b0 = pad_rows(&p.b0, k);
    q.b1 = pad_rows(&p.b1, k);
    q.b2 = vcat(&[&p.b2, &s.b]);
    q.c0 = pad_cols(&p.c0, k);
    q.c2 = pad_cols(&p.c2, k);
    q.c1 = grid(&[vec![&p.c1, &zeros(p.dims.ne, k)], vec![&zeros(m, n), &s.c]]);
    q.d10 = pad_rows(&p.d10, m);
    q.d12 = vcat(&[&p.d12, &s.d]);
    q.d11 = zeros(q.dims.ne, nd);
    Ok(q)
}

fn sensor_noise(p: &LftPlant, w: &Weight) -> Result<LftPlant> {
    let s = &w.system;
    let ny = p.dims.ny;
    if s.outputs() != ny {
        return Err(mismatch(w, "output count", ny, s.outputs()));
    }
    let (k, m) = (s.order(), s.inputs());
    let mut q = p.clone();
    q.dims.n += k;
    q.dims.nd += m;
    q.a = blkdiag(&[&p.a, &s.a]);
    q.b0 = pad_rows(&p.b0, k);
    q.b1 = blkdiag(&[&p.b1, &s.b]);
    q.b2 = pad_rows(&p.b2, k);
    q.c0 = pad_cols(&p.c0, k);
    q.c1 = pad_cols(&p.c1, k);
    q.c2 = hcat(&[&p.c2, &s.c]);
    q.d21 = hcat(&[&p.d21, &s.d]);
    q.d01 = pad_cols(&p.d01, m);
    q.d11 = pad_cols(&p.d11, m);
    Ok(q)
}

fn input_disturbance(p: &LftPlant, w: &Weight) -> Result<LftPlant> {
    let s = &w.system;
    let PlantDims { n, nu, .. } = p.dims;
    if s.outputs() != nu {
        return Err(mismatch(w, "output count", nu, s.outputs()));
    }
    // The disturbance reaches q and e through D02 and D12, which would
    // create the forbidden d -> q and d -> e feedthroughs.
    if max_abs(&p.d02) != 0.0 || max_abs(&p.d12) != 0.0 {
        return Err(Error::TopologyMismatch(format!(
            "weight `{}`: input disturbance requires D02 = 0 and D12 = 0 at the point of insertion",
            w.name
        )));
    }
    let (k, m) = (s.order(), s.inputs());
    let mut q = p.clone();
    q.dims.n += k;
    q.dims.nd += m;
    q.a = grid(&[vec![&p.a, &(&p.b2 * &s.c)], vec![&zeros(k, n), &s.a]]);
    q.b0 = pad_rows(&p.b0, k);
    q.b1 = grid(&[vec![&p.b1, &(&p.b2 * &s.d)], vec![&zeros(k, p.dims.nd), &s.b]]);
    q.b2 = pad_rows(&p.b2, k);
    q.c0 = pad_cols(&p.c0, k);
    q.c1 = pad_cols(&p.c1, k);
    q.c2 = pad_cols(&p.c2, k);
    q.d21 = pad_cols(&p.d21, m);
    q.d01 = pad_cols(&p.d01, m);
    q.d11 = pad_cols(&p.d11, m);
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lft::structure::UncertaintyStructure;

    #[test]
    fn first_order_tf_realization() {
        let w = StateSpace::from_tf(&[0.3, 1.2], &[1.0, 0.04]).unwrap();
        assert_eq!(w.order(), 1);
        for f in [0.01, 0.3, 7.0] {
            let s = Complex64::new(0.0, f);
            let expect = (s * 0.3 + 1.2) / (s + 0.04);
            assert!((w.eval(s).unwrap()[(0, 0)] - expect).norm() < 1e-12);
        }
        assert!((w.b[(0, 0)].abs() - w.c[(0, 0)].abs()).abs() < 1e-12);
    }

    #[test]
    fn second_order_tf_realization() {
        let w = StateSpace::from_tf(&[2.0, 1.0, 3.0], &[1.0, 0.5, 4.0]).unwrap();
        let s = Complex64::new(0.2, 1.3);
        let expect = (s * s * 2.0 + s + 3.0) / (s * s + s * 0.5 + 4.0);
        assert!((w.eval(s).unwrap()[(0, 0)] - expect).norm() < 1e-12);
    }

    #[test]
    fn improper_weight_rejected() {
        assert!(matches!(StateSpace::from_tf(&[1.0, 0.0, 0.0], &[1.0, 1.0]), Err(Error::ImproperWeight(_))));
    }

    #[test]
    fn empty_topology_is_identity() {
        let dims = PlantDims { n: 2, np: 1, nd: 1, ne: 1, nu: 1, ny: 1 };
        let mut p = LftPlant::zeros(dims, UncertaintyStructure::scalar(&[1]).unwrap(), 0.0);
        p.a[(0, 1)] = 1.0;
        assert_eq!(augment_with_weights(&p, &[]).unwrap(), p);
    }

    #[test]
    fn wrong_width_is_topology_mismatch() {
        let dims = PlantDims { n: 1, np: 0, nd: 1, ne: 1, nu: 2, ny: 1 };
        let p = LftPlant::zeros(dims, UncertaintyStructure::nominal(), 0.0);
        let w = Weight::new("act", StateSpace::gain(1.0, 1), WeightPlacement::Actuator);
        assert!(matches!(augment_with_weights(&p, &[w]), Err(Error::TopologyMismatch(_))));
    }
}
