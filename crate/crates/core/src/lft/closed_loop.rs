//! Closing the control loop: state feedback and gain-scheduled LFT
//! output feedback.

use serde::Serialize;

use super::plant::{check_plant, LftPlant, RICCATI_FLOOR};
use super::structure::UncertaintyStructure;
use crate::error::{Error, Result};
use crate::linalg::rows;
use crate::linalg::{self, eye, grid, normalizing_coordinates, obsv_gramian, spectral_radius, vcat, zeros, Mat};

/// Closed-loop LFT system mapping `d -> e` under `p = Delta q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedLoopLft {
    #[serde(with = "rows")]
    pub a: Mat,
    #[serde(with = "rows")]
    pub b0: Mat,
    #[serde(with = "rows")]
    pub b1: Mat,
    #[serde(with = "rows")]
    pub c0: Mat,
    #[serde(with = "rows")]
    pub c1: Mat,
    #[serde(with = "rows")]
    pub d00: Mat,
    #[serde(with = "rows")]
    pub d01: Mat,
    #[serde(with = "rows")]
    pub d10: Mat,
    #[serde(with = "rows")]
    pub d11: Mat,
    pub structure: UncertaintyStructure,
    pub sample_time: f64,
}

/// Frozen-parameter LTI realization `(A, B, C, D)` of the `d -> e` map.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenLti {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl ClosedLoopLft {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn np(&self) -> usize {
        self.b0.ncols()
    }
    pub fn nd(&self) -> usize {
        self.b1.ncols()
    }
    pub fn ne(&self) -> usize {
        self.c1.nrows()
    }

    /// The same loop in coordinates `x = T x~`; `t_inv` is `T^-1`.
    pub fn change_coordinates(&self, t: &Mat, t_inv: &Mat) -> Self {
        Self {
            a: t_inv * &self.a * t,
            b0: t_inv * &self.b0,
            b1: t_inv * &self.b1,
            c0: &self.c0 * t,
            c1: &self.c1 * t,
            ..self.clone()
        }
    }

    /// `(T, T^-1)` normalizing the observability gramian of the nominal
    /// loop with `q` as an extra output. Identity when `A` is not stable.
    pub fn gramian_coordinates(&self) -> (Mat, Mat) {
        let n = self.n();
        let identity = || (eye(n), eye(n));
        if n == 0 || spectral_radius(&self.a) >= 1.0 {
            return identity();
        }
        obsv_gramian(&self.a, &vcat(&[&self.c1, &self.c0]))
            .and_then(|w| normalizing_coordinates(&w, RICCATI_FLOOR))
            .unwrap_or_else(identity)
    }

    pub fn check(&self) -> Result<()> {
        let (n, np, nd, ne) = (self.n(), self.np(), self.nd(), self.ne());
        let expect = [
            ("A_cl", &self.a, n, n),
            ("B0_cl", &self.b0, n, np),
            ("B1_cl", &self.b1, n, nd),
            ("C0_cl", &self.c0, np, n),
            ("C1_cl", &self.c1, ne, n),
            ("D00_cl", &self.d00, np, np),
            ("D01_cl", &self.d01, np, nd),
            ("D10_cl", &self.d10, ne, np),
            ("D11_cl", &self.d11, ne, nd),
        ];
        for (name, m, r, c) in expect {
            if m.shape() != (r, c) {
                return Err(Error::dims(name, format!("{r}x{c}"), format!("{}x{}", m.nrows(), m.ncols())));
            }
        }
        if self.structure.dim() != np {
            return Err(Error::dims("closed-loop uncertainty structure", np, self.structure.dim()));
        }
        Ok(())
    }

    /// `(I - Delta D00)^{-1} Delta`, the map from `q`-sources to `p`.
    pub fn loop_gain(&self, delta: &Mat) -> Result<Mat> {
        let np = self.np();
        if delta.shape() != (np, np) {
            return Err(Error::dims("Delta", format!("{np}x{np}"), format!("{:?}", delta.shape())));
        }
        let m = eye(np) - delta * &self.d00;
        let inv = linalg::inverse(&m).ok_or(Error::IllPosedLoop { step: 0, cond: f64::INFINITY })?;
        Ok(inv * delta)
    }

    /// Close the uncertainty channel with a constant `Delta`.
    pub fn frozen(&self, delta: &Mat) -> Result<FrozenLti> {
        let k = self.loop_gain(delta)?;
        let bk = &self.b0 * &k;
        let dk = &self.d10 * &k;
        Ok(FrozenLti {
            a: &self.a + &bk * &self.c0,
            b: &self.b1 + &bk * &self.d01,
            c: &self.c1 + &dk * &self.c0,
            d: &self.d11 + &dk * &self.d01,
        })
    }
}

/// Gain-scheduled LFT controller.
///
/// ```text
/// [xk+]   [Ak   Bk1  Bk0 ] [xk]
/// [u  ] = [Ck1  0    Dk10] [y ]     pk = Delta qk
/// [qk ]   [Ck0  0    Dk00] [pk]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LftController {
    #[serde(rename = "Ak", with = "rows")]
    pub a_k: Mat,
    #[serde(rename = "Bk1", with = "rows")]
    pub b_k1: Mat,
    #[serde(rename = "Bk0", with = "rows")]
    pub b_k0: Mat,
    #[serde(rename = "Ck1", with = "rows")]
    pub c_k1: Mat,
    #[serde(rename = "Ck0", with = "rows")]
    pub c_k0: Mat,
    #[serde(rename = "Dk10", with = "rows")]
    pub d_k10: Mat,
    #[serde(rename = "Dk00", with = "rows")]
    pub d_k00: Mat,
}

impl LftController {
    pub fn zeros(nk: usize, nu: usize, ny: usize, np: usize) -> Self {
        Self {
            a_k: zeros(nk, nk),
            b_k1: zeros(nk, ny),
            b_k0: zeros(nk, np),
            c_k1: zeros(nu, nk),
            c_k0: zeros(np, nk),
            d_k10: zeros(nu, np),
            d_k00: zeros(np, np),
        }
    }

    pub fn nk(&self) -> usize {
        self.a_k.nrows()
    }
    pub fn nu(&self) -> usize {
        self.c_k1.nrows()
    }
    pub fn ny(&self) -> usize {
        self.b_k1.ncols()
    }
    pub fn np(&self) -> usize {
        self.d_k00.nrows()
    }

    pub fn check(&self) -> Result<()> {
        let (nk, nu, ny, np) = (self.nk(), self.nu(), self.ny(), self.np());
        let expect = [
            ("Ak", &self.a_k, nk, nk),
            ("Bk1", &self.b_k1, nk, ny),
            ("Bk0", &self.b_k0, nk, np),
            ("Ck1", &self.c_k1, nu, nk),
            ("Ck0", &self.c_k0, np, nk),
            ("Dk10", &self.d_k10, nu, np),
            ("Dk00", &self.d_k00, np, np),
        ];
        for (name, m, r, c) in expect {
            if m.shape() != (r, c) {
                return Err(Error::dims(name, format!("{r}x{c}"), format!("{}x{}", m.nrows(), m.ncols())));
            }
        }
        Ok(())
    }

    /// The controller matrix with its two structural zero blocks.
    pub fn matrix(&self) -> Mat {
        let z1 = zeros(self.nu(), self.ny());
        let z2 = zeros(self.np(), self.ny());
        grid(&[
            vec![&self.a_k, &self.b_k1, &self.b_k0],
            vec![&self.c_k1, &z1, &self.d_k10],
            vec![&self.c_k0, &z2, &self.d_k00],
        ])
    }

    /// Split a controller-shaped matrix into blocks; the structural zero
    /// blocks are discarded.
    pub fn from_matrix(m: &Mat, nk: usize, nu: usize, ny: usize, np: usize) -> Self {
        let blk = |r0, c0, r, c| m.view((r0, c0), (r, c)).into_owned();
        Self {
            a_k: blk(0, 0, nk, nk),
            b_k1: blk(0, nk, nk, ny),
            b_k0: blk(0, nk + ny, nk, np),
            c_k1: blk(nk, 0, nu, nk),
            c_k0: blk(nk + nu, 0, np, nk),
            d_k10: blk(nk, nk + ny, nu, np),
            d_k00: blk(nk + nu, nk + ny, np, np),
        }
    }
}

/// Either controller class.
#[derive(Clone, Debug, PartialEq)]
pub enum Controller {
    StateFeedback(Mat),
    Lft(LftController),
}

impl Controller {
    pub fn close(&self, plant: &LftPlant) -> Result<ClosedLoopLft> {
        match self {
            Controller::StateFeedback(f) => close_state_feedback(plant, f),
            Controller::Lft(k) => close_output_feedback(plant, k),
        }
    }
}

/// `u = F x`.
pub fn close_state_feedback(plant: &LftPlant, f: &Mat) -> Result<ClosedLoopLft> {
    check_plant(plant)?;
    let d = plant.dims;
    if f.shape() != (d.nu, d.n) {
        return Err(Error::dims("F", format!("{}x{}", d.nu, d.n), format!("{}x{}", f.nrows(), f.ncols())));
    }
    Ok(ClosedLoopLft {
        a: &plant.a + &plant.b2 * f,
        b0: plant.b0.clone(),
        b1: plant.b1.clone(),
        c0: &plant.c0 + &plant.d02 * f,
        c1: &plant.c1 + &plant.d12 * f,
        d00: plant.d00.clone(),
        d01: plant.d01.clone(),
        d10: plant.d10.clone(),
        d11: plant.d11.clone(),
        structure: plant.structure.clone(),
        sample_time: plant.sample_time,
    })
}

/// The plant with `u = 0`.
pub fn open_loop(plant: &LftPlant) -> Result<ClosedLoopLft> {
    close_state_feedback(plant, &zeros(plant.dims.nu, plant.dims.n))
}

/// Interconnect the plant with a gain-scheduled controller. The closed
/// loop is driven by `diag(Delta, Delta)`; states are ordered `[x; xk]`
/// and uncertainty channels `[p; pk]`.
pub fn close_output_feedback(plant: &LftPlant, k: &LftController) -> Result<ClosedLoopLft> {
    check_plant(plant)?;
    k.check()?;
    let dm = plant.dims;
    if k.nu() != dm.nu || k.ny() != dm.ny || k.np() != dm.np {
        return Err(Error::dims(
            "controller channels (nu, ny, np)",
            format!("({}, {}, {})", dm.nu, dm.ny, dm.np),
            format!("({}, {}, {})", k.nu(), k.ny(), k.np()),
        ));
    }
    let (n, np, nd, nu, ny, ne, nk) = (dm.n, dm.np, dm.nd, dm.nu, dm.ny, dm.ne, k.nk());
    let z = zeros;

    // rows: x, xk | q, qk | e      cols: x, xk | p, pk | d
    let base = grid(&[
        vec![&plant.a, &z(n, nk), &plant.b0, &z(n, np), &plant.b1],
        vec![&z(nk, n), &z(nk, nk), &z(nk, np), &z(nk, np), &z(nk, nd)],
        vec![&plant.c0, &z(np, nk), &plant.d00, &z(np, np), &plant.d01],
        vec![&z(np, n), &z(np, nk), &z(np, np), &z(np, np), &z(np, nd)],
        vec![&plant.c1, &z(ne, nk), &plant.d10, &z(ne, np), &plant.d11],
    ]);
    let left = grid(&[
        vec![&z(n, nk), &plant.b2, &z(n, np)],
        vec![&eye(nk), &z(nk, nu), &z(nk, np)],
        vec![&z(np, nk), &plant.d02, &z(np, np)],
        vec![&z(np, nk), &z(np, nu), &eye(np)],
        vec![&z(ne, nk), &plant.d12, &z(ne, np)],
    ]);
    let right = grid(&[
        vec![&z(nk, n), &eye(nk), &z(nk, np), &z(nk, np), &z(nk, nd)],
        vec![&plant.c2, &z(ny, nk), &plant.d20, &z(ny, np), &plant.d21],
        vec![&z(np, n), &z(np, nk), &z(np, np), &eye(np), &z(np, nd)],
    ]);
    let cl = base + left * k.matrix() * right;

    let nx = n + nk;
    let nq = 2 * np;
    let blk = |r0, c0, r, c| cl.view((r0, c0), (r, c)).into_owned();
    Ok(ClosedLoopLft {
        a: blk(0, 0, nx, nx),
        b0: blk(0, nx, nx, nq),
        b1: blk(0, nx + nq, nx, nd),
        c0: blk(nx, 0, nq, nx),
        d00: blk(nx, nx, nq, nq),
        d01: blk(nx, nx + nq, nq, nd),
        c1: blk(nx + nq, 0, ne, nx),
        d10: blk(nx + nq, nx, ne, nq),
        d11: blk(nx + nq, nx + nq, ne, nd),
        structure: plant.structure.doubled(),
        sample_time: plant.sample_time,
    })
}
