//! Reflected forward diffusion: Euler–Maruyama predictor followed by the
//! implicit projection onto the closed domain, which also produces the
//! local-time increment.

mod assumptions;
mod coeffs;
mod domain;
mod experiments;
mod simulate;

pub use assumptions::{validate_assumptions, AssumptionCheck, AssumptionReport};
pub use coeffs::{AssumptionConstants, CoefficientSet, DriverFn, FieldFn, TerminalFn};
pub use domain::{Domain, DomainKind, PROJECTION_TOL};
pub use experiments::{
    exponential_moment, forward_continuity_experiment, functional_expectation, ContinuityRow, ExpMoment, PointPair,
};
pub use simulate::{
    euler_step, euler_step_with, local_time_ito_residual, map_paths, simulate_ensemble, simulate_ensemble_with,
    simulate_forward, simulate_forward_with, ForwardEnsemble, ForwardPath, Reflection, TimeGrid, BOUNDARY_TOL,
};
