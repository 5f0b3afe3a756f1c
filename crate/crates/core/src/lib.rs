//! Exact optimization of chemotherapy schedules under power-law tumor growth.
//!
//! Tumor size between consecutive period starts follows `S' = alpha * S^beta`
//! (exponential growth when `beta = 1`, Gompertz growth when `beta < 1`), and a
//! dose of treatment `i` multiplies the grown size by `1 - RF_i`. Taking logs
//! turns the dynamics into a linear recurrence in the log size, which is what
//! both the mixed-integer models in [`milp`] and the label-setting solver in
//! [`solver`] work with.
//!
//! Modules:
//! - [`model`]: domain types, dynamics, simulation and spec validation.
//! - [`heuristic`]: the threshold policy and its optimality certificate.
//! - [`oracle`]: exhaustive enumeration and the Bellman recursion (reference solvers).
//! - [`milp`]: mixed-integer model builders and LP text export.
//! - [`solver`]: the exact label-dominance solver and budget sweeps.
//! - [`presets`]: the two reference instances and their published results.

pub mod error;
pub mod heuristic;
pub mod milp;
pub mod model;
pub mod oracle;
pub mod presets;
pub mod random;
pub mod report;
pub mod solver;

pub use error::{Error, Result};
pub use heuristic::{commutation_holds, heuristic_schedule, threshold, HeuristicResult};
pub use model::{
    exponential_coefficients, gompertz_coefficients, grow, simulate, treat, validate_spec, Diagnostic,
    ExponentialParams, FeasibilityReport, GompertzParams, GrowthLaw, ProblemSpec, Schedule, Severity, Trajectory,
    Treatment,
};
pub use report::{Objective, Program, SolveReport, Status};
pub use solver::{solve, solve_general, sweep_budget, SweepEntry};
