use serde::Serialize;

use super::{solve_program, SolverSummary};
use crate::error::Result;
use crate::lft::closed_loop::ClosedLoopLft;
use crate::lft::structure::ScalingValue;
use crate::linalg::{rows, sym, Mat};
use crate::lmi::analysis::build_analysis_with_margin;
use crate::lmi::program::MarginReport;
use crate::sdp::SolverOptions;

/// Feasible point of the analysis LMIs; `gamma = sqrt(tr Q)` bounds the
/// robust H2 norm.
#[derive(Clone, Debug, Serialize)]
pub struct AnalysisCertificate {
    #[serde(with = "rows")]
    pub p_minus: Mat,
    #[serde(with = "rows")]
    pub p_plus: Mat,
    pub x: ScalingValue,
    #[serde(with = "rows")]
    pub q: Mat,
    pub gamma: f64,
    pub margins: MarginReport,
    pub solver: SolverSummary,
}

/// Minimize `tr(Q)` over the analysis LMIs of a discrete closed loop.
/// `Infeasible` means no certificate exists in this class, which does not
/// by itself prove the loop unstable.
///
/// Solved in coordinates normalizing the nominal observability gramian;
/// `P-` and `P+` are returned in the original ones.
pub fn analyze_robust_h2(clp: &ClosedLoopLft, opts: &SolverOptions) -> Result<AnalysisCertificate> {
    clp.check()?;
    let (t, t_inv) = clp.gramian_coordinates();
    let ap = build_analysis_with_margin(&clp.change_coordinates(&t, &t_inv), opts.feas_margin)?;
    let (asg, margins, solver) = solve_program(&ap.program, opts)?;
    let get = |id| asg.get(id).cloned().unwrap();
    let q = get(ap.q);
    let x = match ap.x {
        Some(id) => ScalingValue::from_matrix(&clp.structure, &get(id)),
        None => ScalingValue::identity(&clp.structure),
    };
    let back = |m: Mat| sym(&(&t * m * t.transpose()));
    Ok(AnalysisCertificate {
        p_minus: back(get(ap.p_minus)),
        p_plus: back(get(ap.p_plus)),
        x,
        gamma: q.trace().max(0.0).sqrt(),
        q,
        margins,
        solver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::lft::closed_loop::open_loop;
    use crate::lft::plant::{LftPlant, PlantDims};
    use crate::lft::structure::UncertaintyStructure;

    fn scalar(a: f64, b: f64, c: f64, b0: f64) -> ClosedLoopLft {
        let np = usize::from(b0 != 0.0);
        let dims = PlantDims { n: 1, np, nd: 1, ne: 1, nu: 1, ny: 1 };
        let st = if np == 1 { UncertaintyStructure::scalar(&[1]).unwrap() } else { UncertaintyStructure::nominal() };
        let mut p = LftPlant::zeros(dims, st, 1.0);
        p.a[(0, 0)] = a;
        p.b1[(0, 0)] = b;
        p.c1[(0, 0)] = c;
        if np == 1 {
            p.b0[(0, 0)] = b0;
            p.c0[(0, 0)] = 1.0;
        }
        open_loop(&p).unwrap()
    }

    #[test]
    fn scalar_nominal_closed_form() {
        let cert = analyze_robust_h2(&scalar(0.5, 1.0, 1.0, 0.0), &SolverOptions::default()).unwrap();
        assert!((cert.gamma - (4.0f64 / 3.0).sqrt()).abs() < 1e-4, "{}", cert.gamma);
    }

    #[test]
    fn zero_output_gives_zero_gamma() {
        let cert = analyze_robust_h2(&scalar(0.5, 1.0, 0.0, 0.0), &SolverOptions::default()).unwrap();
        assert!(cert.gamma <= 1e-3, "{}", cert.gamma);
    }

    #[test]
    fn destabilizing_uncertainty_is_infeasible() {
        let r = analyze_robust_h2(&scalar(0.5, 1.0, 1.0, 0.6), &SolverOptions::default());
        assert!(matches!(r, Err(Error::Infeasible)), "{r:?}");
    }
}
