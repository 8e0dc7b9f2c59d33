//! Robust H2 analysis LMIs for a closed-loop LFT system.
//!
//! ```text
//! diag(P-, X, I) - Phi diag(P-, X) Phi' > 0
//! diag(P+, X, I) - Phi diag(P+, X) Phi' > 0,   Phi = [A B0; C0 D00; C1 D10]
//! [Q  B1'; B1  P+ - P-] > 0
//! minimize tr(Q)
//! ```
//! Both Lyapunov-type inequalities share one scaling `X`.

use super::expr::{MatExpr, VarId, VarKind};
use super::program::{LmiProgram, FEAS_MARGIN};
use crate::error::{Error, Result};
use crate::lft::closed_loop::ClosedLoopLft;
use crate::linalg::{eye, vcat};

#[derive(Clone, Debug)]
pub struct AnalysisProgram {
    pub program: LmiProgram,
    pub p_minus: VarId,
    pub p_plus: VarId,
    /// Absent when there is no uncertainty channel.
    pub x: Option<VarId>,
    pub q: VarId,
}

pub fn build_analysis(clp: &ClosedLoopLft) -> Result<AnalysisProgram> {
    build_analysis_with_margin(clp, FEAS_MARGIN)
}

pub fn build_analysis_with_margin(clp: &ClosedLoopLft, feas_margin: f64) -> Result<AnalysisProgram> {
    clp.check()?;
    if !(clp.sample_time > 0.0) {
        return Err(Error::WrongTimeDomain { expected: "discrete-time" });
    }
    let (n, np, nd, ne) = (clp.n(), clp.np(), clp.nd(), clp.ne());
    let mut prog = LmiProgram { feas_margin, ..LmiProgram::new() };
    let p_minus = prog.add_var("P_minus", VarKind::Symmetric(n));
    let p_plus = prog.add_var("P_plus", VarKind::Symmetric(n));
    let x = (np > 0).then(|| prog.add_var("X", VarKind::Scaling(clp.structure.clone())));
    let q = prog.add_var("Q", VarKind::Symmetric(nd));

    let phi_x = vcat(&[&clp.a, &clp.c0, &clp.c1]);
    let phi_p = vcat(&[&clp.b0, &clp.d00, &clp.d10]);
    let xe = x.map_or_else(|| MatExpr::zeros(0, 0), |id| prog.x(id));
    let lyap = |p: VarId| -> MatExpr {
        let pe = prog.x(p);
        let lhs = MatExpr::diag(&[pe.clone(), xe.clone(), MatExpr::constant(eye(ne))]);
        let mut rhs = pe.lmul(&phi_x).rmul(&phi_x.transpose());
        if np > 0 {
            rhs = rhs.add(&xe.lmul(&phi_p).rmul(&phi_p.transpose()));
        }
        lhs.sub(&rhs)
    };
    let c_minus = lyap(p_minus);
    let c_plus = lyap(p_plus);
    let schur = MatExpr::sym_lower(
        &[nd, n],
        &[
            vec![Some(prog.x(q))],
            vec![Some(MatExpr::constant(clp.b1.clone())), Some(prog.x(p_plus).sub(&prog.x(p_minus)))],
        ],
    );
    let pos = MatExpr::diag(&[prog.x(p_minus), xe]);
    prog.require_pd("lyapunov_minus", c_minus);
    prog.require_pd("lyapunov_plus", c_plus);
    prog.require_pd("performance", schur);
    prog.require_pd("positivity", pos);
    prog.minimize_trace(q);
    Ok(AnalysisProgram { program: prog, p_minus, p_plus, x, q })
}
