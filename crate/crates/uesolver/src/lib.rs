//! Static user-equilibrium traffic assignment.
//!
//! The solver minimizes the Beckmann objective (the sum over links of the
//! travel-time integral) with the Frank-Wolfe method: an all-or-nothing
//! assignment at current travel times gives the descent direction, an exact
//! bisection line search gives the step. Convergence is declared when the
//! Euclidean norm of the flow update, normalized by the total link flow,
//! falls below the configured threshold.
//!
//! Equilibrium quality can be audited independently of the solver loop via
//! [`wardrop_gap`] (path-cost optimality) and [`node_residuals`] (demand
//! conservation).

mod assign;
mod error;
mod export;
mod fw;
mod gap;
mod paths;
mod shortest;

pub use assign::{all_or_nothing, node_residuals};
pub use error::SolveError;
pub use export::{solution_csv, trace_csv};
pub use fw::{
    beckmann_objective, bisection_line_search, solve_ue_frank_wolfe, FwTraceRow, SolverOptions,
    UeSolution,
};
pub use gap::{wardrop_gap, GapReport, OdGap};
pub use paths::{enumerate_paths, Path};
pub use shortest::{shortest_path_tree, SpTree};

/// Single-precision aliases; the unsuffixed types default to `f64`.
pub type UeSolution32 = UeSolution<f32>;
pub type SolverOptions32 = SolverOptions<f32>;
