use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid convex specification: {0}")]
    InvalidSpec(String),

    #[error("point is outside the effective domain")]
    NotInDomain,

    #[error("splitting solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("projection step rejected at t = {time}: predictor excess {excess:.3e}, reduce the time step")]
    StepRejected { time: f64, excess: f64 },

    #[error("ensemble too small: {got} paths, need at least {min}")]
    EnsembleTooSmall { got: usize, min: usize },

    #[error("degenerate regression design: {0}")]
    DegenerateDesign(String),

    #[error("ill-conditioned regression design (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("backward fixed point did not converge in {iterations} iterations (residual {residual:.3e})")]
    FixedPoint { iterations: usize, residual: f64 },

    #[error("transition weights of row {row} sum to {sum}")]
    TransitionWeights { row: usize, sum: f64 },

    #[error("boundary stencil lost diagonal dominance (weight {weight})")]
    DiagonalDominance { weight: f64 },

    #[error("linear solver failure: {0}")]
    LinearSolve(String),
}

pub type Result<T> = std::result::Result<T, Error>;
