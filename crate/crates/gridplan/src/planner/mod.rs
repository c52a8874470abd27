//! Centralized planning: problem assembly, solve, price extraction and
//! operation-only evaluation with frozen capacities.

mod assemble;
mod central;
pub mod layout;

pub use assemble::{assemble_lp, Assembled, VOLUME_EPS};
pub use central::{
    evaluate_operation, evaluate_operation_full, extract_lmp, merchandising_surplus,
    planner_solver_settings, solve_centralized, solve_centralized_full, verify_physical,
    FixedCapacities, PlanError, SolveArtifacts,
};
pub use layout::Layout;
