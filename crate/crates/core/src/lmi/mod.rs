//! Decision variables, affine matrix expressions and the LMI programs of
//! robust H2 analysis and synthesis.

pub mod analysis;
pub mod expr;
pub mod gain_scheduling;
pub mod program;
pub mod state_feedback;

pub use expr::{Assignment, DecisionVar, MatExpr, Term, VarId, VarKind};
pub use program::{check_solution, Constraint, ConstraintMargin, LmiProgram, MarginReport, FEAS_MARGIN};
pub use analysis::{build_analysis, AnalysisProgram};
pub use gain_scheduling::{build_gs_synthesis, GsProgram};
pub use state_feedback::{build_sf_synthesis, SfProgram};
