//! Plants, uncertainty structures, interconnections and conversions.

pub mod closed_loop;
pub mod discretize;
pub mod io;
pub mod lpv;
pub mod plant;
pub mod structure;
pub mod weights;

pub use closed_loop::{
    close_output_feedback, close_state_feedback, open_loop, ClosedLoopLft, Controller, FrozenLti, LftController,
};
pub use discretize::zoh_discretize;
pub use io::{controller_from_json, controller_to_json, plant_from_json, plant_to_json};
pub use lpv::{lpv_to_lft, AffineLpvSystem};
pub use plant::{check_assumptions, validate_plant, AssumptionReport, LftPlant, PlantDims, ValidatedPlant};
pub use structure::{sample_uncertainty, ScalingValue, UncertaintyStructure};
pub use weights::{augment_with_weights, StateSpace, Weight, WeightPlacement};
