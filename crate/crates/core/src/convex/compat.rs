//! Sampled check of the compatibility conditions between `phi`, `psi` and
//! the drivers:
//!
//! 1. `<grad phi_eps(y), grad psi_eps(y)> >= 0`
//! 2. `<grad phi_eps(y), g(t,x,y)> <= <grad psi_eps(y), g(t,x,y)>^+` for `x` on the boundary
//! 3. `<grad psi_eps(y), f(t,x~,y)> <= <grad phi_eps(y), f(t,x~,y)>^+` for `x~` in the closure

use rand::Rng;

use super::{ConvexSpec, MoreauParams};
use crate::error::{Error, Result};
use crate::forward::{CoefficientSet, Domain};
use crate::rng::StreamKey;

/// Half-width of the cube from which `y` samples are drawn.
const Y_RANGE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CompatSample {
    pub epsilon: f64,
    pub t: f64,
    pub x: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResidual {
    /// Largest signed violation (`lhs - rhs`); negative means slack everywhere.
    pub worst: f64,
    pub witness: Option<CompatSample>,
}

impl ConditionResidual {
    pub fn residual(&self) -> f64 {
        self.worst.max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub conditions: [ConditionResidual; 3],
}

impl CompatibilityReport {
    pub fn max_residual(&self) -> f64 {
        self.conditions.iter().map(ConditionResidual::residual).fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_compatibility(
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    coeffs: &CoefficientSet,
    domain: &Domain,
    eps_list: &[f64],
    sample_count: usize,
    rng_seed: u64,
) -> Result<CompatibilityReport> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("empty epsilon list".into()));
    }
    let m = coeffs.value_dim;
    if phi.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: phi.dim() });
    }
    if psi.dim() != m {
        return Err(Error::DimensionMismatch { expected: m, got: psi.dim() });
    }
    let mut rng = StreamKey::new(rng_seed, "compatibility").stream(0);
    let mut conditions: [ConditionResidual; 3] =
        std::array::from_fn(|_| ConditionResidual { worst: f64::NEG_INFINITY, witness: None });

    for &e in eps_list {
        let eps = MoreauParams::new(e)?;
        for _ in 0..sample_count {
            let t = rng.random_range(0.0..=coeffs.horizon);
            let x = domain.sample_boundary(&mut rng);
            if domain.ell(&x).abs() > 1e-9 {
                return Err(Error::DegenerateDomain("boundary sampler missed the boundary".into()));
            }
            let x_tilde = domain.sample_closure(&mut rng);
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-Y_RANGE..=Y_RANGE)).collect();

            let gphi = phi.moreau_gradient(eps, &y)?;
            let gpsi = psi.moreau_gradient(eps, &y)?;
            let g = coeffs.g(t, &x, &y);
            let f = coeffs.f(t, &x_tilde, &y);

            let signed = [
                -dot(&gphi, &gpsi),
                dot(&gphi, &g) - dot(&gpsi, &g).max(0.0),
                dot(&gpsi, &f) - dot(&gphi, &f).max(0.0),
            ];
            for (cond, value) in conditions.iter_mut().zip(signed) {
                if value > cond.worst {
                    cond.worst = value;
                    cond.witness =
                        Some(CompatSample { epsilon: e, t, x: x.clone(), x_tilde: x_tilde.clone(), y: y.clone() });
                }
            }
        }
    }
    Ok(CompatibilityReport { conditions })
}
