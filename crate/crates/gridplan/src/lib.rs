//! Capacity planning for prosumer networks under different electricity
//! market designs.
//!
//! `gridplan` plans generation, storage and transmission expansion for a
//! network of prosumer agents, under three market designs — a pool with
//! nodal pricing, a peer-to-peer market with per-pair trade differentiation
//! costs, and a mixed bilateral/pool market — and solves each planning
//! problem both centrally and with a per-agent consensus algorithm.
//!
//! Scenario drivers on top of the planners cover transaction-cost sweeps,
//! no-regret (min-max) planning under market-design uncertainty, technology
//! ban negotiation runs, and preference matrices built from non-green
//! indices or regional partitions.
//!
//! The crate is example-first: each major capability has a runnable example,
//! and a thin `gridplan` binary exposes the same flows over CSV datasets.
//!
//! ```bash
//! cargo run --example solve_pool
//! cargo run --example solve_p2p
//! cargo run --example mixed_market
//! cargo run --example distributed_consensus
//! cargo run --example tc_sweep
//! cargo run --example robust_plan
//! cargo run --example negotiation
//! cargo run --example regional_preferences
//! cargo run --example generate_datasets
//! ```

pub mod datasets;
pub mod model;
pub mod planner;
pub mod qp;

pub use model::{
    validate_problem, AgentSpec, CostBreakdown, Line, MarketDesign, PlanSolution, PlanStatus,
    PlanningProblem, PreferenceMatrix, TechKind, TechnologySpec, ValidProblem, Violation,
};
