//! Discrete/continuous LFT plants with uncertainty, disturbance, control
//! and measurement channels.
//!
//! ```text
//! [x+]   [A   B0   B1   B2 ] [x]
//! [q ] = [C0  D00  0    D02] [p]      p = Delta q
//! [e ]   [C1  D10  0    D12] [d]
//! [y ]   [C2  D20  D21  0  ] [u]
//! ```

use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::structure::UncertaintyStructure;
use crate::error::{Error, Result};
use crate::linalg::{self, dare, eye, max_abs, normalizing_coordinates, vcat, zeros, Mat};

/// Eigenvalues of the Riccati solution below this fraction of the largest
/// are raised to it before building the coordinate change.
pub const RICCATI_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantDims {
    pub n: usize,
    pub np: usize,
    pub nd: usize,
    pub ne: usize,
    pub nu: usize,
    pub ny: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LftPlant {
    pub dims: PlantDims,
    pub a: Mat,
    pub b0: Mat,
    pub b1: Mat,
    pub b2: Mat,
    pub c0: Mat,
    pub c1: Mat,
    pub c2: Mat,
    pub d00: Mat,
    pub d02: Mat,
    pub d10: Mat,
    pub d12: Mat,
    pub d20: Mat,
    pub d21: Mat,
    /// d -> q feedthrough; must be zero.
    pub d01: Mat,
    /// d -> e feedthrough; must be zero.
    pub d11: Mat,
    /// u -> y feedthrough; must be zero.
    pub d22: Mat,
    pub structure: UncertaintyStructure,
    /// Seconds; 0 marks a continuous-time plant.
    pub sample_time: f64,
}

impl LftPlant {
    /// States that can affect `q` or `e` (and `y` when `with_measurement`),
    /// found from the sparsity pattern of `A` and the output matrices.
    pub fn influential_states(&self, with_measurement: bool) -> Vec<usize> {
        let n = self.dims.n;
        let mut outs = vec![&self.c0, &self.c1];
        if with_measurement {
            outs.push(&self.c2);
        }
        let mut keep: Vec<bool> = (0..n).map(|j| outs.iter().any(|c| c.column(j).iter().any(|v| *v != 0.0))).collect();
        loop {
            let mut changed = false;
            for j in 0..n {
                if !keep[j] && (0..n).any(|i| keep[i] && i != j && self.a[(i, j)] != 0.0) {
                    keep[j] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        (0..n).filter(|j| keep[*j]).collect()
    }

    /// The plant restricted to the given states. Exact for the maps into
    /// the outputs that the dropped states cannot reach.
    pub fn restrict_states(&self, states: &[usize]) -> Self {
        let rows = |m: &Mat| m.select_rows(states.iter());
        let cols = |m: &Mat| m.select_columns(states.iter());
        let mut p = self.clone();
        p.dims.n = states.len();
        p.a = cols(&rows(&self.a));
        p.b0 = rows(&self.b0);
        p.b1 = rows(&self.b1);
        p.b2 = rows(&self.b2);
        p.c0 = cols(&self.c0);
        p.c1 = cols(&self.c1);
        p.c2 = cols(&self.c2);
        p
    }

    /// The same plant in coordinates `x = T x~`; `t_inv` is `T^-1`.
    pub fn change_coordinates(&self, t: &Mat, t_inv: &Mat) -> Self {
        let mut p = self.clone();
        p.a = t_inv * &self.a * t;
        p.b0 = t_inv * &self.b0;
        p.b1 = t_inv * &self.b1;
        p.b2 = t_inv * &self.b2;
        p.c0 = &self.c0 * t;
        p.c1 = &self.c1 * t;
        p.c2 = &self.c2 * t;
        p
    }

    /// `(T, T^-1)` with `T' X T` well conditioned, `X` the Riccati solution of
    /// the nominal problem with `q` treated as an extra output. Identity when
    /// that Riccati equation has no stabilizing solution.
    pub fn riccati_coordinates(&self) -> (Mat, Mat) {
        let n = self.dims.n;
        let c = vcat(&[&self.c1, &self.c0]);
        let d = vcat(&[&self.d12, &self.d02]);
        let mut r = d.transpose() * &d;
        let reg = 1e-8 * (1.0 + max_abs(&r).max(max_abs(&c).powi(2)));
        for i in 0..r.nrows() {
            r[(i, i)] += reg;
        }
        let x = match dare(&self.a, &self.b2, &(c.transpose() * &c), &r, &(c.transpose() * &d)) {
            Some(x) if n > 0 => x,
            _ => return (eye(n), eye(n)),
        };
        normalizing_coordinates(&x, RICCATI_FLOOR).unwrap_or_else(|| (eye(n), eye(n)))
    }

    /// All-zero plant of the given size.
    pub fn zeros(dims: PlantDims, structure: UncertaintyStructure, sample_time: f64) -> Self {
        let PlantDims { n, np, nd, ne, nu, ny } = dims;
        Self {
            dims,
            a: zeros(n, n),
            b0: zeros(n, np),
            b1: zeros(n, nd),
            b2: zeros(n, nu),
            c0: zeros(np, n),
            c1: zeros(ne, n),
            c2: zeros(ny, n),
            d00: zeros(np, np),
            d02: zeros(np, nu),
            d10: zeros(ne, np),
            d12: zeros(ne, nu),
            d20: zeros(ny, np),
            d21: zeros(ny, nd),
            d01: zeros(np, nd),
            d11: zeros(ne, nd),
            d22: zeros(ny, nu),
            structure,
            sample_time,
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.sample_time > 0.0
    }

    pub(crate) fn require_discrete(&self) -> Result<()> {
        if self.is_discrete() {
            Ok(())
        } else {
            Err(Error::WrongTimeDomain { expected: "discrete-time" })
        }
    }

    /// `(name, matrix, expected rows, expected cols)` for every block.
    pub(crate) fn blocks(&self) -> Vec<(&'static str, &Mat, usize, usize)> {
        let PlantDims { n, np, nd, ne, nu, ny } = self.dims;
        vec![
            ("A", &self.a, n, n),
            ("B0", &self.b0, n, np),
            ("B1", &self.b1, n, nd),
            ("B2", &self.b2, n, nu),
            ("C0", &self.c0, np, n),
            ("C1", &self.c1, ne, n),
            ("C2", &self.c2, ny, n),
            ("D00", &self.d00, np, np),
            ("D02", &self.d02, np, nu),
            ("D10", &self.d10, ne, np),
            ("D12", &self.d12, ne, nu),
            ("D20", &self.d20, ny, np),
            ("D21", &self.d21, ny, nd),
            ("D01", &self.d01, np, nd),
            ("D11", &self.d11, ne, nd),
            ("D22", &self.d22, ny, nu),
        ]
    }
}

/// A plant whose block dimensions and structural zeros have been checked.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedPlant(LftPlant);

impl ValidatedPlant {
    pub fn into_inner(self) -> LftPlant {
        self.0
    }
}

impl Deref for ValidatedPlant {
    type Target = LftPlant;
    fn deref(&self) -> &LftPlant {
        &self.0
    }
}

pub fn validate_plant(plant: LftPlant) -> Result<ValidatedPlant> {
    check_plant(&plant)?;
    Ok(ValidatedPlant(plant))
}

pub(crate) fn check_plant(plant: &LftPlant) -> Result<()> {
    plant.structure.validate()?;
    if plant.structure.dim() != plant.dims.np {
        return Err(Error::dims("uncertainty structure", plant.dims.np, plant.structure.dim()));
    }
    if !(plant.sample_time >= 0.0 && plant.sample_time.is_finite()) {
        return Err(Error::InvalidArgument(format!("sample time {} must be >= 0", plant.sample_time)));
    }
    for (name, m, r, c) in plant.blocks() {
        if m.shape() != (r, c) {
            return Err(Error::dims(name, format!("{r}x{c}"), format!("{}x{}", m.nrows(), m.ncols())));
        }
        if !linalg::all_finite(m) {
            return Err(Error::NonFiniteResult(format!("plant block {name}")));
        }
    }
    for (name, m) in [("D01", &plant.d01), ("D11", &plant.d11), ("D22", &plant.d22)] {
        let v = max_abs(m);
        if v != 0.0 {
            return Err(Error::StructuralViolation {
                block: name.into(),
                max_abs: v,
            });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub stabilizable: bool,
    pub detectable: bool,
    /// Eigenvalues (re, im) failing the stabilizability rank test.
    pub uncontrollable_modes: Vec<(f64, f64)>,
    /// Eigenvalues (re, im) failing the detectability rank test.
    pub undetectable_modes: Vec<(f64, f64)>,
}

/// Eigenvalue rank tests for `(A, B2)` stabilizability and `(A, C2)`
/// detectability. Modes with `|lambda| >= 1` (discrete) or
/// `Re lambda >= 0` (continuous) must satisfy `rank [A - lambda I, B2] = n`.
pub fn check_assumptions(plant: &LftPlant) -> AssumptionReport {
    let discrete = plant.is_discrete();
    let uncontrollable = failing_modes(&plant.a, &plant.b2, discrete);
    let undetectable = failing_modes(&plant.a.transpose(), &plant.c2.transpose(), discrete);
    AssumptionReport {
        stabilizable: uncontrollable.is_empty(),
        detectable: undetectable.is_empty(),
        uncontrollable_modes: uncontrollable,
        undetectable_modes: undetectable,
    }
}

fn failing_modes(a: &Mat, b: &Mat, discrete: bool) -> Vec<(f64, f64)> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let scale = 1.0 + max_abs(a) + max_abs(b);
    let mut out = Vec::new();
    for lambda in a.complex_eigenvalues().iter() {
        let unstable = if discrete {
            lambda.norm() >= 1.0 - 1e-12
        } else {
            lambda.re >= -1e-12
        };
        if !unstable {
            continue;
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n + b.ncols());
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex64::new(a[(i, j)], 0.0);
            }
            m[(i, i)] -= lambda;
            for j in 0..b.ncols() {
                m[(i, n + j)] = Complex64::new(b[(i, j)], 0.0);
            }
        }
        let sv = m.svd(false, false).singular_values;
        let rank = sv.iter().filter(|&&s| s > 1e-9 * scale).count();
        if rank < n {
            out.push((lambda.re, lambda.im));
        }
    }
    out
}
