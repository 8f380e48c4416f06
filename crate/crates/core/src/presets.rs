//! Named problem presets. Each one passes the sampled assumption checks.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::convex::ConvexSpec;
use crate::error::Error;
use crate::forward::{AssumptionConstants, CoefficientSet, Domain, DriverFn, FieldFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    /// Neumann heat equation, no drivers.
    Heat,
    /// Drift, linear drivers and a constant-plus-linear boundary flux.
    Drifted,
    /// Constant source capped by an upper obstacle in the interior.
    ObstacleInterior,
    /// Boundary flux capped by an upper obstacle acting through the local time.
    ObstacleBoundary,
    /// `b = sigma = 0`, `f = -y`: a linear ODE along a frozen state.
    LinearOde,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::Heat,
        PresetName::Drifted,
        PresetName::ObstacleInterior,
        PresetName::ObstacleBoundary,
        PresetName::LinearOde,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Heat => "heat",
            PresetName::Drifted => "drifted",
            PresetName::ObstacleInterior => "obstacle_interior",
            PresetName::ObstacleBoundary => "obstacle_boundary",
            PresetName::LinearOde => "linear_ode",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{s}'")))
    }
}

/// A fully specified problem: domain, coefficients and the two convex terms.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub domain: Domain,
    pub coeffs: CoefficientSet,
    pub phi: ConvexSpec,
    pub psi: ConvexSpec,
}

fn constant_field(v: f64) -> FieldFn {
    Arc::new(move |_, _, out: &mut [f64]| out[0] = v)
}

fn constant_driver(v: f64) -> DriverFn {
    Arc::new(move |_, _, _, out: &mut [f64]| out[0] = v)
}

fn unit_interval() -> Domain {
    Domain::interval(-1.0, 1.0).expect("valid interval")
}

fn upper_obstacle(level: f64) -> ConvexSpec {
    ConvexSpec::indicator_box(vec![f64::NEG_INFINITY], vec![level]).expect("valid box")
}

impl Problem {
    pub fn preset(name: PresetName) -> Problem {
        let zero = ConvexSpec::zero(1);
        let (coeffs, phi, psi) = match name {
            PresetName::Heat => (
                CoefficientSet {
                    state_dim: 1,
                    value_dim: 1,
                    horizon: 0.5,
                    drift: constant_field(0.0),
                    diffusion: constant_field(1.0),
                    driver: constant_driver(0.0),
                    boundary_driver: constant_driver(0.0),
                    terminal: Arc::new(|x, out| out[0] = (PI * x[0]).cos()),
                    constants: AssumptionConstants { beta: 0.0, gamma: 0.0, lipschitz: 0.0, bound: 1.0 },
                    time_homogeneous: true,
                },
                zero.clone(),
                zero,
            ),
            PresetName::Drifted => (
                CoefficientSet {
                    state_dim: 1,
                    value_dim: 1,
                    horizon: 0.5,
                    drift: Arc::new(|_, x, out| out[0] = 0.3 - 0.5 * x[0]),
                    diffusion: constant_field(0.7),
                    driver: Arc::new(|_, x, y, out| out[0] = -0.5 * y[0] + 0.25 * (PI * x[0]).sin()),
                    boundary_driver: Arc::new(|_, _, y, out| out[0] = 0.2 - 0.1 * y[0]),
                    terminal: Arc::new(|x, out| out[0] = 0.5 + 0.5 * x[0]),
                    constants: AssumptionConstants { beta: 0.1, gamma: 0.5, lipschitz: 0.5, bound: 1.0 },
                    time_homogeneous: true,
                },
                zero.clone(),
                zero,
            ),
            PresetName::ObstacleInterior => (
                CoefficientSet {
                    state_dim: 1,
                    value_dim: 1,
                    horizon: 0.5,
                    drift: constant_field(0.0),
                    diffusion: constant_field(1.0),
                    driver: constant_driver(2.0),
                    boundary_driver: constant_driver(0.0),
                    terminal: Arc::new(|x, out| out[0] = 0.5 * (PI * x[0]).cos()),
                    constants: AssumptionConstants { beta: 0.0, gamma: 2.0, lipschitz: 0.0, bound: 1.0 },
                    time_homogeneous: true,
                },
                upper_obstacle(0.6),
                zero,
            ),
            PresetName::ObstacleBoundary => (
                CoefficientSet {
                    state_dim: 1,
                    value_dim: 1,
                    horizon: 0.5,
                    drift: constant_field(0.0),
                    diffusion: constant_field(1.0),
                    driver: constant_driver(0.0),
                    boundary_driver: constant_driver(1.0),
                    terminal: Arc::new(|x, out| out[0] = 0.2 * (PI * x[0]).cos()),
                    constants: AssumptionConstants { beta: 0.0, gamma: 1.0, lipschitz: 0.0, bound: 1.0 },
                    time_homogeneous: true,
                },
                zero,
                upper_obstacle(0.3),
            ),
            PresetName::LinearOde => (
                CoefficientSet {
                    state_dim: 1,
                    value_dim: 1,
                    horizon: 1.0,
                    drift: constant_field(0.0),
                    diffusion: constant_field(0.0),
                    driver: Arc::new(|_, _, y, out| out[0] = -y[0]),
                    boundary_driver: constant_driver(0.0),
                    terminal: Arc::new(|x, out| out[0] = 1.0 + 0.5 * x[0] * x[0]),
                    constants: AssumptionConstants { beta: 0.0, gamma: 1.0, lipschitz: 0.0, bound: 1.0 },
                    time_homogeneous: true,
                },
                zero.clone(),
                zero,
            ),
        };
        Problem { name: name.as_str().to_string(), domain: unit_interval(), coeffs, phi, psi }
    }
}
