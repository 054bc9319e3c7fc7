//! Machine assignment and setup-matrix materialization.

mod assign;
mod setup;

pub use assign::{assign_machines, AssignmentResult, MachineLoad};
pub use setup::{build_setup_matrices, clean_cost, sequencing_literals, SetupMatrix};
