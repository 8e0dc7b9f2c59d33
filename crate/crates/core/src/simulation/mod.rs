//! Time-domain simulation of closed-loop LFT systems and the estimators
//! that check synthesis guarantees against it.

mod estimate;
mod run;

pub use estimate::{
    estimate_h2_white_noise, estimate_induced_gain, frequency_grid, parameter_grid, step_disturbance_response,
    GainEstimate, GainKind, WhiteNoiseOptions, DEFAULT_FREQUENCIES,
};
pub use run::{settling_step, simulate, write_csv, DeltaTrajectory, SimulationRun, ILL_POSED_COND};
