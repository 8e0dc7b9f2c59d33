//! Robust H2 analysis and synthesis for discrete-time LFT systems via
//! LMIs, with a built-in semidefinite programming solver.

pub mod error;
pub mod lft;
pub mod linalg;
pub mod lmi;
pub mod plants;
pub mod sdp;
pub mod simulation;
pub mod synthesis;

pub use error::{Error, Result};
pub use lft::*;
pub use linalg::Mat;
