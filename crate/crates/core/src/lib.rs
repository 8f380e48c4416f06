//! Numerical engine for reflected forward-backward SDEs whose backward
//! equation carries two subdifferential terms: one against `dt`, one
//! against the boundary local time.
//!
//! Modules, bottom-up:
//!
//! - [`convex`]: resolvents, Moreau envelopes and the compatibility checker.
//! - [`cadlag`]: paths on finite grids, Stieltjes integrals, conditional variation.
//! - [`forward`]: reflected Euler scheme with local time.
//! - [`backward`]: resolvent-splitting backward solver (grid and regression engines).
//! - [`valuefn`]: the value function `u(t, x) = Y_t^{t,x}` and its experiments.
//! - [`pde_oracle`]: finite-difference solver of the variational inequality.

pub mod backward;
pub mod cadlag;
pub mod convex;
pub mod error;
pub mod forward;
pub mod pde_oracle;
pub mod presets;
pub mod regress;
pub mod rng;
pub mod stats;
pub mod valuefn;

pub use convex::{ConvexKind, ConvexSpec, ExtReal, MoreauParams};
pub use error::{Error, Result};
pub use forward::{CoefficientSet, Domain, DomainKind, ForwardEnsemble, ForwardPath, TimeGrid};
pub use presets::{PresetName, Problem};
pub use rng::StreamKey;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
