//! Semidefinite programming: standard form, interior-point solver and
//! solution checks.

pub mod ipm;
pub mod standard;

pub use ipm::{solve, SdpSolution, SdpStatus, SolverOptions};
pub use standard::{to_standard_form, SdpBlock, StandardSdp, Triplets};
pub use crate::lmi::program::{check_solution, MarginReport};
