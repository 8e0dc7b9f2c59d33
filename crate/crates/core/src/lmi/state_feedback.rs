//! Robust H2 state-feedback synthesis LMIs. `V` replaces `P+-` in the
//! closed-loop state matrix so that `A V + B2 M` is affine; `F = M V^-1`.
//!
//! For `P` in `{P+, P-}`, with blocks ordered `[x | p | x+ | q | e]`:
//!
//! ```text
//! [ V'+V-P                     *        *    *   * ]
//! [ 0                          X        *    *   * ]
//! [ A V + B2 M                 B0 X     P    *   * ]  > 0
//! [ C0 V + D02 M               D00 X    0    X   * ]
//! [ C1 V + D12 M               D10 X    0    0   I ]
//! ```
//! The `(5,2)` block is `D10 X` (its transpose `X D10'` in the upper
//! triangle), which is what the congruence `diag(V', X, I, I, I)` of the
//! closed-loop analysis conditions produces.

use super::expr::{MatExpr, VarId, VarKind};
use super::program::{LmiProgram, FEAS_MARGIN};
use crate::error::Result;
use crate::lft::plant::{check_plant, LftPlant};
use crate::linalg::eye;

#[derive(Clone, Debug)]
pub struct SfProgram {
    pub program: LmiProgram,
    pub p_minus: VarId,
    pub p_plus: VarId,
    pub x: Option<VarId>,
    pub q: VarId,
    pub m: VarId,
    pub v: VarId,
}

pub fn build_sf_synthesis(plant: &LftPlant) -> Result<SfProgram> {
    build_sf_synthesis_with_margin(plant, FEAS_MARGIN)
}

pub fn build_sf_synthesis_with_margin(plant: &LftPlant, feas_margin: f64) -> Result<SfProgram> {
    check_plant(plant)?;
    plant.require_discrete()?;
    let d = plant.dims;
    let (n, np, nd, ne, nu) = (d.n, d.np, d.nd, d.ne, d.nu);
    let mut prog = LmiProgram { feas_margin, ..LmiProgram::new() };
    let p_minus = prog.add_var("P_minus", VarKind::Symmetric(n));
    let p_plus = prog.add_var("P_plus", VarKind::Symmetric(n));
    let x = (np > 0).then(|| prog.add_var("X", VarKind::Scaling(plant.structure.clone())));
    let q = prog.add_var("Q", VarKind::Symmetric(nd));
    let m = prog.add_var("M", VarKind::Rectangular(nu, n));
    let v = prog.add_var("V", VarKind::Rectangular(n, n));

    let xe = x.map_or_else(|| MatExpr::zeros(0, 0), |id| prog.x(id));
    let ve = prog.x(v);
    let me = prog.x(m);
    let row = |c: &crate::linalg::Mat, dm: &crate::linalg::Mat| ve.lmul(c).add(&me.lmul(dm));
    let av = row(&plant.a, &plant.b2);
    let c0v = row(&plant.c0, &plant.d02);
    let c1v = row(&plant.c1, &plant.d12);
    let b0x = xe.lmul(&plant.b0);
    let d00x = xe.lmul(&plant.d00);
    let d10x = xe.lmul(&plant.d10);

    let lmi = |p: VarId| -> MatExpr {
        let pe = prog.x(p);
        MatExpr::sym_lower(
            &[n, np, n, np, ne],
            &[
                vec![Some(ve.add(&ve.t()).sub(&pe))],
                vec![None, Some(xe.clone())],
                vec![Some(av.clone()), Some(b0x.clone()), Some(pe)],
                vec![Some(c0v.clone()), Some(d00x.clone()), None, Some(xe.clone())],
                vec![Some(c1v.clone()), Some(d10x.clone()), None, None, Some(MatExpr::constant(eye(ne)))],
            ],
        )
    };
    let c_plus = lmi(p_plus);
    let c_minus = lmi(p_minus);
    let schur = MatExpr::sym_lower(
        &[nd, n],
        &[
            vec![Some(prog.x(q))],
            vec![Some(MatExpr::constant(plant.b1.clone())), Some(prog.x(p_plus).sub(&prog.x(p_minus)))],
        ],
    );
    let pos = MatExpr::diag(&[prog.x(p_minus), xe.clone()]);
    prog.require_pd("synthesis_plus", c_plus);
    prog.require_pd("synthesis_minus", c_minus);
    prog.require_pd("performance", schur);
    prog.require_pd("positivity", pos);
    prog.minimize_trace(q);
    Ok(SfProgram { program: prog, p_minus, p_plus, x, q, m, v })
}
