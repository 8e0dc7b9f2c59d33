//! Primal-dual interior-point method on the homogeneous self-dual
//! embedding, with Nesterov-Todd scaling and Mehrotra correction.
//!
//! The primal is `min c'x  s.t.  G x + s = h, s >= 0` with `G x = -sum x_k F_k`
//! and `h = F0`; the dual is `max -h'z  s.t.  G'z + c = 0, z >= 0`. Free
//! variables are handled natively through the reduced (Schur) system.

use nalgebra::{Cholesky, DVector, Dyn};
use serde::Serialize;

use super::standard::{SdpBlock, StandardSdp, Triplets};
use crate::linalg::{eye, min_eig, zeros, Mat};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Strictness margin used when building LMI programs.
    pub feas_margin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 200, feas_margin: 1e-7 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    /// Converged to the requested accuracy.
    Optimal,
    /// Converged on a problem without objective, or stopped early at a
    /// strictly feasible point without certifying optimality.
    Feasible,
    /// Primal infeasibility certificate found.
    Infeasible,
    /// Dual infeasibility certificate found (objective unbounded below).
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

impl SdpStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SdpStatus::Optimal | SdpStatus::Feasible)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Complementarity `<s, z>` of the normalized iterate.
    pub gap: f64,
    /// Minimum eigenvalue of `F0 + sum x_k F_k` for every block.
    pub margins: Vec<f64>,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// One coefficient matrix with both triangles listed.
struct Coeff {
    k: usize,
    full: Vec<(usize, usize, f64)>,
    rows: Vec<usize>,
}

struct Block {
    dim: usize,
    f0: Mat,
    coeffs: Vec<Coeff>,
}

struct Problem {
    m: usize,
    c: DVector<f64>,
    blocks: Vec<Block>,
}

impl Problem {
    fn new(sdp: &StandardSdp) -> Self {
        let blocks = sdp
            .blocks
            .iter()
            .map(|b| Block {
                dim: b.dim,
                f0: b.f0_dense(),
                coeffs: b
                    .coeffs
                    .iter()
                    .map(|(k, t)| {
                        let mut full = Vec::with_capacity(2 * t.len());
                        for &(i, j, v) in t {
                            full.push((i, j, v));
                            if i != j {
                                full.push((j, i, v));
                            }
                        }
                        let mut rows: Vec<usize> = full.iter().map(|e| e.0).collect();
                        rows.sort_unstable();
                        rows.dedup();
                        Coeff { k: *k, full, rows }
                    })
                    .collect(),
            })
            .collect();
        Self { m: sdp.num_vars(), c: DVector::from_column_slice(&sdp.c), blocks }
    }

    fn nu(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    /// `sum_k x_k F_k` per block.
    fn f_apply(&self, x: &DVector<f64>) -> Vec<Mat> {
        self.blocks
            .iter()
            .map(|b| {
                let mut out = zeros(b.dim, b.dim);
                for cf in &b.coeffs {
                    let xk = x[cf.k];
                    if xk != 0.0 {
                        for &(i, j, v) in &cf.full {
                            out[(i, j)] += v * xk;
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// `[<F_k, Y>]_k`.
    fn f_adjoint(&self, y: &[Mat]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (b, yb) in self.blocks.iter().zip(y) {
            for cf in &b.coeffs {
                out[cf.k] += cf.full.iter().map(|&(i, j, v)| v * yb[(i, j)]).sum::<f64>();
            }
        }
        out
    }

    fn f0_inner(&self, y: &[Mat]) -> f64 {
        self.blocks.iter().zip(y).map(|(b, yb)| b.f0.dot(yb)).sum()
    }

    /// `K_kl = sum_b <F_k, Wi F_l Wi>`.
    fn schur(&self, wi: &[Mat]) -> Mat {
        let mut k = zeros(self.m, self.m);
        for (b, w) in self.blocks.iter().zip(wi) {
            for (li, cl) in b.coeffs.iter().enumerate() {
                let t = congruence(w, cl);
                for ck in &b.coeffs[..=li] {
                    let v: f64 = ck.full.iter().map(|&(i, j, f)| f * t[(i, j)]).sum();
                    k[(ck.k, cl.k)] += v;
                    if ck.k != cl.k {
                        k[(cl.k, ck.k)] += v;
                    }
                }
            }
        }
        k
    }
}

/// `W F W` for a sparse symmetric `F`.
fn congruence(w: &Mat, cf: &Coeff) -> Mat {
    let n = w.nrows();
    let r = cf.rows.len();
    let mut y = zeros(r, n);
    for &(i, j, v) in &cf.full {
        let pos = cf.rows.binary_search(&i).unwrap();
        for c in 0..n {
            y[(pos, c)] += v * w[(j, c)];
        }
    }
    let wc = w.select_columns(cf.rows.iter());
    wc * y
}

fn frob2(ms: &[Mat]) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum()
}

/// `X o Y = (XY + YX) / 2`.
fn jordan(x: &Mat, y: &Mat) -> Mat {
    let p = x * y;
    (&p + p.transpose()) * 0.5
}

/// `(Lambda <> r)_ij = 2 r_ij / (l_i + l_j)`, the inverse of `Lambda o .`.
fn lambda_div(l: &DVector<f64>, r: &Mat) -> Mat {
    Mat::from_fn(r.nrows(), r.ncols(), |i, j| 2.0 * r[(i, j)] / (l[i] + l[j]))
}

/// Largest `a` with `Lambda + a D >= 0`.
fn max_step_scaled(l: &DVector<f64>, d: &Mat) -> f64 {
    if d.nrows() == 0 {
        return f64::INFINITY;
    }
    let s = l.map(|v| 1.0 / v.sqrt());
    let m = Mat::from_fn(d.nrows(), d.ncols(), |i, j| s[i] * d[(i, j)] * s[j]);
    let e = min_eig(&m);
    if e < 0.0 {
        -1.0 / e
    } else {
        f64::INFINITY
    }
}

/// Nesterov-Todd scaling of one block: `R^T z R = R^{-1} s R^{-T} = diag(lambda)`.
struct Scaling {
    r: Mat,
    rinv: Mat,
    lambda: DVector<f64>,
}

impl Scaling {
    /// From a pair of positive definite matrices `(s, z)`.
    fn from_pair(s: &Mat, z: &Mat) -> Option<Self> {
        let ls = Cholesky::new(sym_copy(s))?.unpack();
        let lz = Cholesky::new(sym_copy(z))?.unpack();
        let svd = (lz.transpose() * &ls).svd(false, true);
        let vt = svd.v_t?;
        let lambda = svd.singular_values.clone();
        if lambda.iter().any(|v| !(*v > 0.0)) {
            return None;
        }
        let isq = lambda.map(|v| 1.0 / v.sqrt());
        let mut t = ls * vt.transpose();
        for j in 0..t.ncols() {
            let mut c = t.column_mut(j);
            c *= isq[j];
        }
        let r = t;
        let rinv = r.clone().lu().try_inverse()?;
        Some(Self { r, rinv, lambda })
    }
}

fn sym_copy(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

struct KFactor {
    k: Mat,
    chol: Cholesky<f64, Dyn>,
}

impl KFactor {
    fn new(k: Mat) -> Option<Self> {
        let scale = k.diagonal().iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let mut reg = 1e-14 * scale;
        for _ in 0..6 {
            let mut kr = k.clone();
            for i in 0..kr.nrows() {
                kr[(i, i)] += reg;
            }
            if let Some(chol) = Cholesky::new(kr) {
                return Some(Self { k, chol });
            }
            reg *= 100.0;
        }
        None
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.chol.solve(rhs);
        for _ in 0..3 {
            let r = rhs - &self.k * &x;
            x += self.chol.solve(&r);
        }
        x
    }
}

const STEP: f64 = 0.98;
/// Certificates of infeasibility or unboundedness must be this much
/// tighter than `tol`: a very large optimal value looks like one otherwise.
const INFEASIBILITY_FACTOR: f64 = 1e-3;
/// Iterations without improvement of the best residual before giving up.
const STALL_ITERS: usize = 5;

/// Objective slack, relative to the stalled objective, allowed in turn when
/// a stalled run is pushed into the interior.
const RECOVERY_SLACK: [f64; 4] = [1e-2, 1e-1, 0.5, 2.0];

/// Solve a standard-form SDP. Deterministic: the same input always gives
/// bit-identical output.
///
/// The problem is equilibrated first. A run that stops early still returns
/// its best point as `Feasible` when that point satisfies every original
/// constraint strictly, even where it falls short of the requested margin.
/// When it does not, the largest common margin `t` is maximized over the
/// constraints with the objective capped slightly above the stalled value,
/// and a point with `t > 0` is returned as `Feasible`.
pub fn solve(sdp: &StandardSdp, opts: &SolverOptions) -> SdpSolution {
    let sol = solve_once(sdp, opts);
    let stopped = matches!(sol.status, SdpStatus::MaxIterations | SdpStatus::NumericalFailure);
    if !stopped || sol.status == SdpStatus::Feasible || !sol.primal_objective.is_finite() {
        return sol;
    }
    let mut iterations = sol.iterations;
    for slack in RECOVERY_SLACK {
        let cap = sol.primal_objective + slack * sol.primal_objective.abs().max(1.0);
        let aux = solve_once(&margin_problem(sdp, cap), opts);
        iterations += aux.iterations;
        if !aux.status.has_solution() {
            continue;
        }
        let x = aux.x[..sdp.num_vars()].to_vec();
        let margins = margins_of(sdp, &x);
        if strictly_feasible(sdp, &margins) && x.iter().all(|v| v.is_finite()) {
            return SdpSolution {
                status: SdpStatus::Feasible,
                primal_objective: sdp.c.iter().zip(&x).map(|(c, x)| c * x).sum(),
                dual_objective: f64::NAN,
                gap: f64::NAN,
                x,
                margins,
                iterations,
                primal_residual: aux.primal_residual,
                dual_residual: aux.dual_residual,
            };
        }
    }
    SdpSolution { iterations, ..sol }
}

fn solve_once(sdp: &StandardSdp, opts: &SolverOptions) -> SdpSolution {
    let (eq, scale) = equilibrate(sdp);
    let mut sol = solve_equilibrated(&eq, opts);
    sol.x = sol.x.iter().zip(&scale).map(|(x, s)| x * s).collect();
    sol.margins = margins_of(sdp, &sol.x);
    let stopped = matches!(sol.status, SdpStatus::MaxIterations | SdpStatus::NumericalFailure);
    if stopped && strictly_feasible(sdp, &sol.margins) && sol.x.iter().all(|v| v.is_finite()) {
        sol.status = SdpStatus::Feasible;
    }
    sol
}

fn strictly_feasible(sdp: &StandardSdp, margins: &[f64]) -> bool {
    margins.iter().zip(&sdp.blocks).all(|(m, b)| *m + b.shift > 0.0)
}

/// `max t  s.t.  F_b(x) >= t I,  c'x <= cap,  t <= 1` with `t` appended as
/// the last variable.
fn margin_problem(sdp: &StandardSdp, cap: f64) -> StandardSdp {
    let m = sdp.num_vars();
    let mut blocks: Vec<SdpBlock> = sdp
        .blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.coeffs.push((m, (0..b.dim).map(|i| (i, i, -1.0)).collect()));
            b
        })
        .collect();
    let objective: Vec<(usize, Triplets)> =
        sdp.c.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, c)| (k, vec![(0, 0, -c)])).collect();
    if !objective.is_empty() {
        blocks.push(SdpBlock { dim: 1, f0: vec![(0, 0, cap)], coeffs: objective, shift: 0.0 });
    }
    blocks.push(SdpBlock { dim: 1, f0: vec![(0, 0, 1.0)], coeffs: vec![(m, vec![(0, 0, -1.0)])], shift: 0.0 });
    let mut c = vec![0.0; m + 1];
    c[m] = -1.0;
    StandardSdp { c, blocks }
}

/// Sweeps of alternating row and variable scaling.
const EQUILIBRATION_SWEEPS: usize = 8;

/// Symmetric diagonal scaling `D_b F D_b` of every block and positive
/// scaling of every variable, driving the largest entry of each row and
/// of each coefficient matrix towards one. Returns the scaled problem and
/// the variable scales (`x = scale .* x_scaled`).
fn equilibrate(sdp: &StandardSdp) -> (StandardSdp, Vec<f64>) {
    let m = sdp.num_vars();
    let mut vs = vec![1.0; m];
    let mut ds: Vec<Vec<f64>> = sdp.blocks.iter().map(|b| vec![1.0; b.dim]).collect();
    for _ in 0..EQUILIBRATION_SWEEPS {
        let mut vmax = vec![0.0f64; m];
        for (b, d) in sdp.blocks.iter().zip(&ds) {
            for (k, t) in &b.coeffs {
                for &(i, j, v) in t {
                    vmax[*k] = vmax[*k].max((d[i] * v * d[j] * vs[*k]).abs());
                }
            }
        }
        for (s, v) in vs.iter_mut().zip(&vmax) {
            if *v > 0.0 {
                *s /= v.sqrt();
            }
        }
        for (b, d) in sdp.blocks.iter().zip(ds.iter_mut()) {
            let mut rmax = vec![0.0f64; b.dim];
            let mut touch = |i: usize, j: usize, v: f64| {
                rmax[i] = rmax[i].max(v);
                rmax[j] = rmax[j].max(v);
            };
            for (k, t) in &b.coeffs {
                for &(i, j, v) in t {
                    touch(i, j, (d[i] * v * d[j] * vs[*k]).abs());
                }
            }
            for (di, r) in d.iter_mut().zip(&rmax) {
                if *r > 0.0 {
                    *di /= r.sqrt().sqrt();
                }
            }
        }
    }
    let blocks = sdp
        .blocks
        .iter()
        .zip(&ds)
        .map(|(b, d)| {
            let tr = |t: &Triplets, s: f64| -> Triplets { t.iter().map(|&(i, j, v)| (i, j, d[i] * v * d[j] * s)).collect() };
            SdpBlock {
                dim: b.dim,
                f0: tr(&b.f0, 1.0),
                coeffs: b.coeffs.iter().map(|(k, t)| (*k, tr(t, vs[*k]))).collect(),
                shift: 0.0,
            }
        })
        .collect();
    let c = sdp.c.iter().zip(&vs).map(|(c, s)| c * s).collect();
    (StandardSdp { c, blocks }, vs)
}

fn solve_equilibrated(sdp: &StandardSdp, opts: &SolverOptions) -> SdpSolution {
    let p = Problem::new(sdp);
    let nb = p.blocks.len();
    let m = p.m;
    let nu = p.nu() as f64;
    let resx0 = p.c.norm().max(1.0);
    let resz0 = p.blocks.iter().map(|b| b.f0.norm_squared()).sum::<f64>().sqrt().max(1.0);
    let h: Vec<Mat> = p.blocks.iter().map(|b| b.f0.clone()).collect();

    // Least-squares starting point, shifted into the cone.
    let identity: Vec<Mat> = p.blocks.iter().map(|b| eye(b.dim)).collect();
    let k0 = match KFactor::new(p.schur(&identity)) {
        Some(k) => k,
        None => return failure(&p, sdp, DVector::zeros(m), SdpStatus::NumericalFailure, 0),
    };
    let mut x = -k0.solve(&p.f_adjoint(&h));
    let fx = p.f_apply(&x);
    let mut s0: Vec<Mat> = h.iter().zip(&fx).map(|(a, b)| a + b).collect();
    let mut z0 = p.f_apply(&k0.solve(&p.c));
    shift_into_cone(&mut s0);
    shift_into_cone(&mut z0);
    let mut s = s0;
    let mut z = z0;
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut iter = 0;
    let mut best: Option<(f64, DVector<f64>, f64, f64, f64, f64, f64)> = None;
    let mut since_best = 0;
    // Lowest-objective iterate satisfying every block, for early exits.
    let mut best_feasible: Option<(f64, DVector<f64>, f64, f64, f64, f64)> = None;
    loop {
        let mut sc: Vec<Scaling> = Vec::with_capacity(nb);
        for b in 0..nb {
            match Scaling::from_pair(&s[b], &z[b]) {
                Some(q) => sc.push(q),
                None if best.is_some() => {
                    let (_, bx, bp, bd, bg, bpr, bdr) = best.clone().unwrap();
                    return fallback(&p, sdp, bx, SdpStatus::NumericalFailure, iter, bp, bd, bg, bpr, bdr);
                }
                None => return failure(&p, sdp, x, SdpStatus::NumericalFailure, iter),
            }
        }
        let fx = p.f_apply(&x);
        let rx = -p.f_adjoint(&z) + &p.c * tau;
        let rz: Vec<Mat> = (0..nb).map(|b| &s[b] - &fx[b] - &h[b] * tau).collect();
        let cx = p.c.dot(&x);
        let hz = p.f0_inner(&z);
        let rt = kappa + cx + hz;
        let sz: f64 = sc.iter().map(|q| q.lambda.norm_squared()).sum();
        let mu = (sz + tau * kappa) / (nu + 1.0);

        let pcost = cx / tau;
        let dcost = -hz / tau;
        let pres = frob2(&rz).sqrt() / tau / resz0;
        let dres = rx.norm() / tau / resx0;
        let gap = sz / (tau * tau);

        if pres <= opts.tol && dres <= opts.tol && gap / pcost.abs().max(1.0) <= opts.tol {
            let status = if p.c.iter().all(|v| *v == 0.0) { SdpStatus::Feasible } else { SdpStatus::Optimal };
            return finish(&p, sdp, &x / tau, status, iter, pcost, dcost, gap, pres, dres);
        }
        if hz < 0.0 {
            let pinf = p.f_adjoint(&z).norm() / resx0 / (-hz);
            if pinf <= opts.tol * INFEASIBILITY_FACTOR {
                return finish(&p, sdp, &x / tau, SdpStatus::Infeasible, iter, pcost, dcost, gap, pres, dres);
            }
        }
        if cx < 0.0 {
            let gs: f64 = (0..nb).map(|b| (&s[b] - &fx[b]).norm_squared()).sum::<f64>().sqrt();
            if gs / resz0 / (-cx) <= opts.tol * INFEASIBILITY_FACTOR {
                return finish(&p, sdp, &x / tau, SdpStatus::Unbounded, iter, pcost, dcost, gap, pres, dres);
            }
        }
        if best_feasible.as_ref().is_none_or(|b| pcost < b.0) && (0..nb).all(|b| (&fx[b] / tau + &h[b]).cholesky().is_some()) {
            best_feasible = Some((pcost, &x / tau, dcost, gap, pres, dres));
        }
        let merit = pres.max(dres).max(gap / pcost.abs().max(1.0));
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, &x / tau, pcost, dcost, gap, pres, dres));
            since_best = 0;
        } else {
            since_best += 1;
        }
        // Keep the best iterate seen so far for early exits.
        macro_rules! bail {
            ($status:expr) => {{
                match best_feasible.clone() {
                    Some((bp, bx, bd, bg, bpr, bdr)) => fallback(&p, sdp, bx, $status, iter, bp, bd, bg, bpr, bdr),
                    None => {
                        let (_, bx, bp, bd, bg, bpr, bdr) = best.clone().unwrap();
                        fallback(&p, sdp, bx, $status, iter, bp, bd, bg, bpr, bdr)
                    }
                }
            }};
        }
        if iter >= opts.max_iter {
            return bail!(SdpStatus::MaxIterations);
        }
        if since_best >= STALL_ITERS && best.as_ref().is_some_and(|b| b.0 <= opts.tol.sqrt()) {
            return bail!(SdpStatus::NumericalFailure);
        }
        iter += 1;

        let wi: Vec<Mat> = sc.iter().map(|q| q.rinv.transpose() * &q.rinv).collect();
        let kf = match KFactor::new(p.schur(&wi)) {
            Some(k) => k,
            None => return bail!(SdpStatus::NumericalFailure),
        };
        // Solve `K dx = rhs`, refined against the operator rather than the
        // assembled `K`, which loses accuracy as the scalings degrade.
        let ksolve = |rhs: &DVector<f64>| -> DVector<f64> {
            let mut dx = kf.solve(rhs);
            for _ in 0..2 {
                let fdx = p.f_apply(&dx);
                let wfw: Vec<Mat> = (0..nb).map(|b| &wi[b] * &fdx[b] * &wi[b]).collect();
                dx += kf.solve(&(rhs - p.f_adjoint(&wfw)));
            }
            dx
        };
        let wf0w: Vec<Mat> = (0..nb).map(|b| &wi[b] * &h[b] * &wi[b]).collect();
        let g = p.f_adjoint(&wf0w) + &p.c;
        let dx2 = ksolve(&(-&g));
        let fdx2 = p.f_apply(&dx2);
        let dz2: Vec<Mat> = (0..nb).map(|b| -(&wi[b] * (&fdx2[b] + &h[b]) * &wi[b])).collect();
        let q2 = p.c.dot(&dx2) + p.f0_inner(&dz2);

        // Newton direction for complementarity target `r` (scaled space),
        // residual weight `beta`, and tau-kappa target `rk`.
        let direction = |r: &[Mat], beta: f64, rk: f64| -> Option<(DVector<f64>, f64, f64, Vec<Mat>, Vec<Mat>)> {
            let lr: Vec<Mat> = (0..nb).map(|b| lambda_div(&sc[b].lambda, &r[b])).collect();
            let inner: Vec<Mat> =
                (0..nb).map(|b| &rz[b] * beta + &sc[b].r * &lr[b] * sc[b].r.transpose()).collect();
            let winner: Vec<Mat> = (0..nb).map(|b| &wi[b] * &inner[b] * &wi[b]).collect();
            let rhs1 = -&rx * beta + p.f_adjoint(&winner);
            let dx1 = ksolve(&rhs1);
            let fdx1 = p.f_apply(&dx1);
            let dz1: Vec<Mat> = (0..nb).map(|b| &wi[b] * (&inner[b] - &fdx1[b]) * &wi[b]).collect();
            let q1 = p.c.dot(&dx1) + p.f0_inner(&dz1);
            let den = kappa - tau * q2;
            if !(den.abs() > 0.0) {
                return None;
            }
            let dtau = (tau * beta * rt + tau * q1 + rk) / den;
            let dkappa = (rk - kappa * dtau) / tau;
            let dx = dx1 + &dx2 * dtau;
            let fdx = p.f_apply(&dx);
            let mut ds = Vec::with_capacity(nb);
            let mut dz = Vec::with_capacity(nb);
            for b in 0..nb {
                let y = -&fdx[b] + &rz[b] * beta - &h[b] * dtau;
                let dsb = -(&sc[b].rinv * y * sc[b].rinv.transpose());
                let dsb = sym_copy(&dsb);
                dz.push(&lr[b] - &dsb);
                ds.push(dsb);
            }
            if !dx.iter().all(|v| v.is_finite()) || !dtau.is_finite() {
                return None;
            }
            Some((dx, dtau, dkappa, ds, dz))
        };

        let step_len = |ds: &[Mat], dz: &[Mat], dtau: f64, dkappa: f64| -> f64 {
            let mut a = f64::INFINITY;
            for b in 0..nb {
                a = a.min(max_step_scaled(&sc[b].lambda, &ds[b]));
                a = a.min(max_step_scaled(&sc[b].lambda, &dz[b]));
            }
            if dtau < 0.0 {
                a = a.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-kappa / dkappa);
            }
            a
        };

        // Predictor.
        let r_aff: Vec<Mat> = sc.iter().map(|q| -Mat::from_diagonal(&q.lambda.map(|v| v * v))).collect();
        let Some((_, dtau_a, dkappa_a, ds_a, dz_a)) = direction(&r_aff, 1.0, -tau * kappa) else {
            return bail!(SdpStatus::NumericalFailure);
        };
        let alpha_a = step_len(&ds_a, &dz_a, dtau_a, dkappa_a).min(1.0);
        let sigma = (1.0 - alpha_a).powi(3);

        // Corrector.
        let r_cor: Vec<Mat> = (0..nb)
            .map(|b| &r_aff[b] + eye(sc[b].lambda.len()) * (sigma * mu) - jordan(&ds_a[b], &dz_a[b]))
            .collect();
        let rk = -tau * kappa + sigma * mu - dtau_a * dkappa_a;
        let Some((dx, dtau, dkappa, ds, dz)) = direction(&r_cor, 1.0 - sigma, rk) else {
            return bail!(SdpStatus::NumericalFailure);
        };
        // Refine the full direction against the linearized dual equation.
        // A correction `dx += e` with `ds += F e`, `dz -= Wi F e Wi` keeps
        // the primal and complementarity equations intact.
        let mut dx = dx;
        let mut dso: Vec<Mat> = (0..nb).map(|b| sym_copy(&(&sc[b].r * &ds[b] * sc[b].r.transpose()))).collect();
        let mut dzo: Vec<Mat> = (0..nb).map(|b| sym_copy(&(sc[b].rinv.transpose() * &dz[b] * &sc[b].rinv))).collect();
        let beta = 1.0 - sigma;
        for _ in 0..2 {
            let lin = -p.f_adjoint(&dzo) + &p.c * dtau + &rx * beta;
            if lin.norm() <= 1e-3 * beta * rx.norm() {
                break;
            }
            let e = -kf.solve(&lin);
            let fe = p.f_apply(&e);
            dx += &e;
            for b in 0..nb {
                dso[b] += &fe[b];
                dzo[b] -= &wi[b] * &fe[b] * &wi[b];
            }
        }
        let ds: Vec<Mat> = (0..nb).map(|b| &sc[b].rinv * &dso[b] * sc[b].rinv.transpose()).collect();
        let dz: Vec<Mat> = (0..nb).map(|b| sc[b].r.transpose() * &dzo[b] * &sc[b].r).collect();
        let alpha = (STEP * step_len(&ds, &dz, dtau, dkappa)).min(1.0);
        if alpha < 1e-12 {
            return bail!(SdpStatus::NumericalFailure);
        }

        x += &dx * alpha;
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        for b in 0..nb {
            s[b] += &dso[b] * alpha;
            z[b] += &dzo[b] * alpha;
        }
    }
}

fn shift_into_cone(ms: &mut [Mat]) {
    let lmin = ms.iter().map(min_eig).fold(f64::INFINITY, f64::min);
    let scale = frob2(ms).sqrt().max(1.0);
    if lmin.is_finite() && lmin <= 1e-8 * scale {
        for m in ms.iter_mut() {
            let n = m.nrows();
            *m += eye(n) * (1.0 - lmin);
        }
    }
}

fn margins_of(sdp: &StandardSdp, x: &[f64]) -> Vec<f64> {
    sdp.blocks.iter().map(|b| min_eig(&b.eval(x))).collect()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &Problem,
    sdp: &StandardSdp,
    x: DVector<f64>,
    status: SdpStatus,
    iterations: usize,
    pcost: f64,
    dcost: f64,
    gap: f64,
    pres: f64,
    dres: f64,
) -> SdpSolution {
    let xs: Vec<f64> = x.iter().copied().collect();
    let margins = margins_of(sdp, &xs);
    let _ = p;
    SdpSolution {
        status,
        x: xs,
        primal_objective: pcost,
        dual_objective: dcost,
        gap,
        margins,
        iterations,
        primal_residual: pres,
        dual_residual: dres,
    }
}

/// Stopped without convergence.
#[allow(clippy::too_many_arguments)]
fn fallback(
    p: &Problem,
    sdp: &StandardSdp,
    x: DVector<f64>,
    status: SdpStatus,
    iterations: usize,
    pcost: f64,
    dcost: f64,
    gap: f64,
    pres: f64,
    dres: f64,
) -> SdpSolution {
    finish(p, sdp, x, status, iterations, pcost, dcost, gap, pres, dres)
}

fn failure(p: &Problem, sdp: &StandardSdp, x: DVector<f64>, status: SdpStatus, iterations: usize) -> SdpSolution {
    finish(p, sdp, x, status, iterations, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
}
