//! Backward solver: resolvent splitting for the two subdifferential terms,
//! with a grid engine for one-dimensional states and a regression engine
//! on simulated path ensembles.

mod grid;
mod regression;
mod step;
mod transition;
mod verify;

pub use grid::{solve_grid, space_nodes, GridSolution};
pub use regression::{solve_regression, BackwardSolution, MIN_REGRESSION_PATHS};
pub use step::{backward_step, ProxMode, SolverParams, SplitOrder, StepResult};
pub use transition::{transition_rows, Transition, TransitionRow, ROW_SUM_TOL};
pub use verify::{moment_bound_check, variational_residual, MomentRow, MomentTable};
