//! Robust H2 analysis, state-feedback synthesis and gain-scheduled
//! output-feedback synthesis with controller recovery.

pub mod analysis;
pub mod gain_scheduling;
pub mod state_feedback;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lmi::expr::Assignment;
use crate::lmi::program::{LmiProgram, MarginReport};
use crate::sdp::{solve, to_standard_form, SdpStatus, SolverOptions};

pub use analysis::{analyze_robust_h2, AnalysisCertificate};
pub use gain_scheduling::{
    check_gs_certificate, forward_transform, recover_gs_controller, synthesize_gs, GsSynthesisResult, GsVariables, Recovery,
    RecoveryFactors,
};
pub use state_feedback::{synthesize_sf, SfSynthesisResult};

/// What the solver reported for one LMI program.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverSummary {
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// Solve a program and return the assignment, or `Infeasible` /
/// `SolverFailure`. The assignment is returned only if every constraint
/// holds strictly at it.
pub(crate) fn solve_program(
    program: &LmiProgram,
    opts: &SolverOptions,
) -> Result<(Assignment, MarginReport, SolverSummary)> {
    let sdp = to_standard_form(program);
    let sol = solve(&sdp, opts);
    let summary = SolverSummary {
        status: sol.status,
        iterations: sol.iterations,
        primal_objective: sol.primal_objective,
        dual_objective: sol.dual_objective,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
    };
    match sol.status {
        SdpStatus::Optimal | SdpStatus::Feasible => {}
        SdpStatus::Infeasible => return Err(Error::Infeasible),
        other => {
            return Err(Error::SolverFailure(format!(
                "{other:?} after {} iterations (primal residual {:e}, dual residual {:e})",
                sol.iterations, sol.primal_residual, sol.dual_residual
            )))
        }
    }
    let asg = program.scatter(&sol.x);
    let report = program.check(&asg)?;
    if !report.all_positive() {
        return Err(Error::SolverFailure(format!(
            "solution violates a constraint (min eigenvalue {:e})",
            report.min_margin()
        )));
    }
    Ok((asg, report, summary))
}
