//! Planning of smart radio environments: where to put RIS, STAR-RIS and
//! network-controlled repeaters so that a mmWave base station reaches every
//! outdoor test point.
//!
//! The pipeline is scenario -> link budgets -> activation tables -> solver.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activation;
pub mod catalog;
pub mod channel;
pub mod optimizer;
pub mod scenario;
pub mod sweeps;
pub mod topology;

pub use activation::{compute_activation, ActivationTables, CoverageStats};
pub use catalog::{build_catalog, Catalog, CatalogConfig, CostModel, DeviceSpec, Flavor, Technology};
pub use channel::{DeviceConfig, LinkBudgetParams};
pub use optimizer::{
    brute_force, plannable_tps, solve_exact, solve_fcmc_exact, solve_greedy, solve_mbcc_exact, Install, PlanError, PlanInstance,
    PlanKind, PlanSolution,
};
pub use scenario::{generate_manhattan, load_scenario, load_scenario_file, ManhattanParams, Point3, Scenario};
pub use sweeps::{run_sweep, SweepAxis, SweepConfig, SweepModel, SweepPoint, SweepResult, TpSelection};
pub use topology::export_topology;
