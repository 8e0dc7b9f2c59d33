//! Gain-scheduled H2 output-feedback synthesis LMIs in the transformed
//! controller variables.
//!
//! With `G = G_const + Left * Khat * Right` (rows `[x | xk | q_L | q | e]`,
//! columns `[S-part | I-part | p | pk]`) and `T` in `{T+, T-}`:
//!
//! ```text
//! [ [S+S'  I+U'; U+I  R+R'] - T      *             *   *            * ]
//! [ 0                                [L I; I J]    *   *            * ]
//! [ G3.                                            T   *            * ]  > 0
//! [ G4.                                            0   [L I; I J]   * ]
//! [ G5.                                            0   0            I ]
//! ```
//! The `q_L` row of the constant term is `[0, L C0, L D00, 0]`.

use super::expr::{MatExpr, VarId, VarKind};
use super::program::{LmiProgram, FEAS_MARGIN};
use crate::error::Result;
use crate::lft::plant::{check_plant, LftPlant};
use crate::linalg::{eye, grid, zeros, Mat};

#[derive(Clone, Debug)]
pub struct GsProgram {
    pub program: LmiProgram,
    pub t_plus: VarId,
    pub t_minus: VarId,
    pub q: VarId,
    pub l: Option<VarId>,
    pub j: Option<VarId>,
    pub r: VarId,
    pub s: VarId,
    pub u: VarId,
    pub a_k: VarId,
    pub b_k1: VarId,
    pub b_k0: VarId,
    pub c_k1: VarId,
    pub c_k0: VarId,
    pub d_k10: VarId,
    pub d_k00: VarId,
    /// The transformed closed-loop matrix `[G3.; G4.; G5.]`.
    pub g: MatExpr,
    /// `H21 = [B1; R B1] + [0 B2 0; I 0 0] Khat [0; D21; 0]`.
    pub h21: MatExpr,
}

/// `Left` and `Right` factors of the affine product in `G`.
pub(crate) fn g_factors(p: &LftPlant) -> (Mat, Mat) {
    let d = p.dims;
    let (n, np, ne, nu, ny) = (d.n, d.np, d.ne, d.nu, d.ny);
    let z = zeros;
    let left = grid(&[
        vec![&z(n, n), &p.b2, &z(n, np)],
        vec![&eye(n), &z(n, nu), &z(n, np)],
        vec![&z(np, n), &z(np, nu), &eye(np)],
        vec![&z(np, n), &p.d02, &z(np, np)],
        vec![&z(ne, n), &p.d12, &z(ne, np)],
    ]);
    let right = grid(&[
        vec![&eye(n), &z(n, n), &z(n, np), &z(n, np)],
        vec![&z(ny, n), &p.c2, &p.d20, &z(ny, np)],
        vec![&z(np, n), &z(np, n), &z(np, np), &eye(np)],
    ]);
    (left, right)
}

pub fn build_gs_synthesis(plant: &LftPlant) -> Result<GsProgram> {
    build_gs_synthesis_with_margin(plant, FEAS_MARGIN)
}

pub fn build_gs_synthesis_with_margin(plant: &LftPlant, feas_margin: f64) -> Result<GsProgram> {
    check_plant(plant)?;
    plant.require_discrete()?;
    let d = plant.dims;
    let (n, np, nd, ne, nu, ny) = (d.n, d.np, d.nd, d.ne, d.nu, d.ny);
    let mut prog = LmiProgram { feas_margin, ..LmiProgram::new() };
    let t_plus = prog.add_var("T_plus", VarKind::Symmetric(2 * n));
    let t_minus = prog.add_var("T_minus", VarKind::Symmetric(2 * n));
    let q = prog.add_var("Q", VarKind::Symmetric(nd));
    let l = (np > 0).then(|| prog.add_var("L", VarKind::Scaling(plant.structure.clone())));
    let j = (np > 0).then(|| prog.add_var("J", VarKind::Scaling(plant.structure.clone())));
    let r = prog.add_var("R", VarKind::Rectangular(n, n));
    let s = prog.add_var("S", VarKind::Rectangular(n, n));
    let u = prog.add_var("U", VarKind::Rectangular(n, n));
    let a_k = prog.add_var("Ak_hat", VarKind::Rectangular(n, n));
    let b_k1 = prog.add_var("Bk1_hat", VarKind::Rectangular(n, ny));
    let b_k0 = prog.add_var("Bk0_hat", VarKind::Rectangular(n, np));
    let c_k1 = prog.add_var("Ck1_hat", VarKind::Rectangular(nu, n));
    let c_k0 = prog.add_var("Ck0_hat", VarKind::Rectangular(np, n));
    let d_k10 = prog.add_var("Dk10_hat", VarKind::Rectangular(nu, np));
    let d_k00 = prog.add_var("Dk00_hat", VarKind::Rectangular(np, np));

    let zero = MatExpr::zeros;
    let cst = |m: &Mat| MatExpr::constant(m.clone());
    let le = l.map_or_else(|| zero(0, 0), |id| prog.x(id));
    let je = j.map_or_else(|| zero(0, 0), |id| prog.x(id));
    let (re, se, ue) = (prog.x(r), prog.x(s), prog.x(u));

    let khat = MatExpr::grid(&[
        vec![prog.x(a_k), prog.x(b_k1), prog.x(b_k0)],
        vec![prog.x(c_k1), zero(nu, ny), prog.x(d_k10)],
        vec![prog.x(c_k0), zero(np, ny), prog.x(d_k00)],
    ]);
    let (left, right) = g_factors(plant);
    let g_const = MatExpr::grid(&[
        vec![se.lmul(&plant.a), cst(&plant.a), cst(&plant.b0), je.lmul(&plant.b0)],
        vec![zero(n, n), re.rmul(&plant.a), re.rmul(&plant.b0), zero(n, np)],
        vec![zero(np, n), le.rmul(&plant.c0), le.rmul(&plant.d00), zero(np, np)],
        vec![se.lmul(&plant.c0), cst(&plant.c0), cst(&plant.d00), je.lmul(&plant.d00)],
        vec![se.lmul(&plant.c1), cst(&plant.c1), cst(&plant.d10), je.lmul(&plant.d10)],
    ]);
    let g = g_const.add(&khat.lmul(&left).rmul(&right));

    let left_h = left.rows(0, 2 * n).into_owned();
    let right_h = grid(&[vec![&zeros(n, nd)], vec![&plant.d21], vec![&zeros(np, nd)]]);
    let h21 = MatExpr::grid(&[vec![cst(&plant.b1)], vec![re.rmul(&plant.b1)]]).add(&khat.lmul(&left_h).rmul(&right_h));

    let coupling = MatExpr::grid(&[vec![le.clone(), cst(&eye(np))], vec![cst(&eye(np)), je.clone()]]);
    let vblock = MatExpr::grid(&[
        vec![se.add(&se.t()), ue.t().add_const(&eye(n))],
        vec![ue.add_const(&eye(n)), re.add(&re.t())],
    ]);
    let head = 2 * n + 2 * np;
    let lmi = |t: VarId| -> MatExpr {
        let te = prog.x(t);
        let top = MatExpr::diag(&[vblock.sub(&te), coupling.clone()]);
        let bottom = MatExpr::diag(&[te, coupling.clone(), cst(&eye(ne))]);
        MatExpr::sym_lower(&[head, head + ne], &[vec![Some(top)], vec![Some(g.clone()), Some(bottom)]])
    };
    let c_plus = lmi(t_plus);
    let c_minus = lmi(t_minus);
    let schur = MatExpr::sym_lower(
        &[nd, 2 * n],
        &[vec![Some(prog.x(q))], vec![Some(h21.clone()), Some(prog.x(t_plus).sub(&prog.x(t_minus)))]],
    );
    prog.require_pd("synthesis_plus", c_plus);
    prog.require_pd("synthesis_minus", c_minus);
    prog.require_pd("performance", schur);
    prog.require_pd("positivity", prog.x(t_minus));
    prog.minimize_trace(q);
    Ok(GsProgram {
        program: prog,
        t_plus,
        t_minus,
        q,
        l,
        j,
        r,
        s,
        u,
        a_k,
        b_k1,
        b_k0,
        c_k1,
        c_k0,
        d_k10,
        d_k00,
        g,
        h21,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lft::plant::PlantDims;
    use crate::lft::structure::UncertaintyStructure;
    use crate::lmi::expr::Assignment;
    use crate::linalg::{max_abs, vcat};

    fn plant() -> LftPlant {
        let dims = PlantDims { n: 2, np: 1, nd: 1, ne: 2, nu: 1, ny: 1 };
        let mut p = LftPlant::zeros(dims, UncertaintyStructure::scalar(&[1]).unwrap(), 0.1);
        let f = |r, c, s: f64| Mat::from_fn(r, c, |i, j| ((i * 5 + j * 2 + 1) as f64 * s).cos());
        p.a = f(2, 2, 0.3);
        p.b0 = f(2, 1, 0.7);
        p.b1 = f(2, 1, 1.9);
        p.b2 = f(2, 1, 0.4);
        p.c0 = f(1, 2, 2.2);
        p.c1 = f(2, 2, 0.8);
        p.c2 = f(1, 2, 1.2);
        p.d00 = f(1, 1, 0.5);
        p.d02 = f(1, 1, 2.9);
        p.d10 = f(2, 1, 1.4);
        p.d12 = f(2, 1, 0.1);
        p.d20 = f(1, 1, 3.3);
        p.d21 = f(1, 1, 0.6);
        p
    }

    fn assignment(gs: &GsProgram, hat_scale: f64) -> Assignment {
        let x: Vec<f64> = (0..gs.program.num_coords()).map(|i| ((i as f64) * 0.37).sin()).collect();
        let mut a = gs.program.scatter(&x);
        for id in [gs.a_k, gs.b_k1, gs.b_k0, gs.c_k1, gs.c_k0, gs.d_k10, gs.d_k00] {
            let v = a.get(id).unwrap() * hat_scale;
            a.set(id, v);
        }
        a
    }

    #[test]
    fn zero_hat_variables_leave_the_constant_term() {
        let p = plant();
        let gs = build_gs_synthesis(&p).unwrap();
        let a = assignment(&gs, 0.0);
        let (r, s, l, j) = (
            a.get(gs.r).unwrap(),
            a.get(gs.s).unwrap(),
            a.get(gs.l.unwrap()).unwrap(),
            a.get(gs.j.unwrap()).unwrap(),
        );
        let z = zeros;
        let expect = grid(&[
            vec![&(&p.a * s), &p.a, &p.b0, &(&p.b0 * j)],
            vec![&z(2, 2), &(r * &p.a), &(r * &p.b0), &z(2, 1)],
            vec![&z(1, 2), &(l * &p.c0), &(l * &p.d00), &z(1, 1)],
            vec![&(&p.c0 * s), &p.c0, &p.d00, &(&p.d00 * j)],
            vec![&(&p.c1 * s), &p.c1, &p.d10, &(&p.d10 * j)],
        ]);
        let got = gs.program.eval_expr(&gs.g, &a).unwrap();
        assert!(max_abs(&(got - expect)) < 1e-14);
        let h = gs.program.eval_expr(&gs.h21, &a).unwrap();
        assert!(max_abs(&(h - vcat(&[&p.b1, &(r * &p.b1)]))) < 1e-14);
    }

    #[test]
    fn g_matches_independent_product() {
        let p = plant();
        let gs = build_gs_synthesis(&p).unwrap();
        let a = assignment(&gs, 1.0);
        let gv = |id| a.get(id).unwrap().clone();
        let (r, s, l, j) = (gv(gs.r), gv(gs.s), gv(gs.l.unwrap()), gv(gs.j.unwrap()));
        let z = zeros;
        let base = grid(&[
            vec![&(&p.a * &s), &p.a, &p.b0, &(&p.b0 * &j)],
            vec![&z(2, 2), &(&r * &p.a), &(&r * &p.b0), &z(2, 1)],
            vec![&z(1, 2), &(&l * &p.c0), &(&l * &p.d00), &z(1, 1)],
            vec![&(&p.c0 * &s), &p.c0, &p.d00, &(&p.d00 * &j)],
            vec![&(&p.c1 * &s), &p.c1, &p.d10, &(&p.d10 * &j)],
        ]);
        let k = grid(&[
            vec![&gv(gs.a_k), &gv(gs.b_k1), &gv(gs.b_k0)],
            vec![&gv(gs.c_k1), &z(1, 1), &gv(gs.d_k10)],
            vec![&gv(gs.c_k0), &z(1, 1), &gv(gs.d_k00)],
        ]);
        let left = grid(&[
            vec![&z(2, 2), &p.b2, &z(2, 1)],
            vec![&Mat::identity(2, 2), &z(2, 1), &z(2, 1)],
            vec![&z(1, 2), &z(1, 1), &Mat::identity(1, 1)],
            vec![&z(1, 2), &p.d02, &z(1, 1)],
            vec![&z(2, 2), &p.d12, &z(2, 1)],
        ]);
        let right = grid(&[
            vec![&Mat::identity(2, 2), &z(2, 2), &z(2, 1), &z(2, 1)],
            vec![&z(1, 2), &p.c2, &p.d20, &z(1, 1)],
            vec![&z(1, 2), &z(1, 2), &z(1, 1), &Mat::identity(1, 1)],
        ]);
        let expect = base + left * k * right;
        let got = gs.program.eval_expr(&gs.g, &a).unwrap();
        assert!(max_abs(&(got - expect)) < 1e-10);
    }

    #[test]
    fn constraints_are_symmetric() {
        let gs = build_gs_synthesis(&plant()).unwrap();
        let a = assignment(&gs, 1.0);
        for c in gs.program.eval_constraints(&a).unwrap() {
            assert!(crate::linalg::asymmetry(&c) <= 1e-12);
        }
    }
}
