//! Sampled checks of the standing assumptions on the coefficients and the
//! convex terms. Each check reports its worst positive violation.

use rand::Rng;

use super::{CoefficientSet, Domain};
use crate::convex::{check_compatibility, ConvexSpec, ExtReal};
use crate::error::Result;
use crate::rng::StreamKey;

const Y_RANGE: f64 = 4.0;
/// Moreau parameters used for the compatibility check.
const COMPAT_EPS: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub tolerance: f64,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn nonfinite_penalty(v: &[f64]) -> f64 {
    if v.iter().all(|a| a.is_finite()) {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Default)]
struct Worst([f64; 10]);

impl Worst {
    fn record(&mut self, i: usize, value: f64) {
        let v = if value.is_nan() { f64::INFINITY } else { value };
        self.0[i] = self.0[i].max(v);
    }
}

const NAMES: [&str; 10] = [
    "lipschitz_b_sigma",
    "growth_f",
    "growth_g",
    "monotone_f",
    "monotone_g",
    "lipschitz_g",
    "terminal_bound_phi",
    "terminal_bound_psi",
    "normalization",
    "compatibility",
];

/// Samples `(t, x, x~, y)` and evaluates every assumption inequality.
pub fn validate_assumptions(
    domain: &Domain,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    sample_count: usize,
    seed: u64,
    tolerance: f64,
) -> Result<AssumptionReport> {
    let c = coeffs.constants;
    let m = coeffs.value_dim;
    let mut rng = StreamKey::new(seed, "assumptions").stream(0);
    let mut worst = Worst::default();
    let sample_y = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..m).map(|_| rng.random_range(-Y_RANGE..=Y_RANGE)).collect()
    };

    for _ in 0..sample_count {
        let t = rng.random_range(0.0..=coeffs.horizon);
        let t2 = rng.random_range(0.0..=coeffs.horizon);
        let x = domain.sample_closure(&mut rng);
        let x2 = domain.sample_closure(&mut rng);
        let xb = domain.sample_boundary(&mut rng);
        let xb2 = domain.sample_boundary(&mut rng);
        let y = sample_y(&mut rng);
        let y2 = sample_y(&mut rng);

        let (b1, b2) = (coeffs.b(t, &x), coeffs.b(t, &x2));
        let (s1, s2) = (coeffs.sigma(t, &x), coeffs.sigma(t, &x2));
        let lip = dist(&b1, &b2) + dist(&s1, &s2) - c.lipschitz * dist(&x, &x2);
        worst.record(0, lip + nonfinite_penalty(&b1) + nonfinite_penalty(&s1));

        let f1 = coeffs.f(t, &x, &y);
        let f2 = coeffs.f(t, &x, &y2);
        worst.record(1, norm(&f1) - c.gamma * (1.0 + norm(&y)) + nonfinite_penalty(&f1));

        let g1 = coeffs.g(t, &xb, &y);
        let g2 = coeffs.g(t, &xb, &y2);
        worst.record(2, norm(&g1) - c.gamma * (1.0 + norm(&y)) + nonfinite_penalty(&g1));

        let dy: Vec<f64> = y.iter().zip(&y2).map(|(a, b)| a - b).collect();
        let dy2 = dot(&dy, &dy);
        let df: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a - b).collect();
        worst.record(3, dot(&dy, &df) - c.beta * dy2);
        worst.record(4, dot(&dy, &dg) - c.beta * dy2);

        let g3 = coeffs.g(t2, &xb2, &y2);
        let dg3: Vec<f64> = g1.iter().zip(&g3).map(|(a, b)| a - b).collect();
        worst.record(5, norm(&dg3) - c.beta * ((t - t2).abs() + dist(&xb, &xb2) + dist(&y, &y2)));

        let h = coeffs.h(&x);
        for (i, spec) in [(6, phi), (7, psi)] {
            let v = match spec.evaluate(&h)? {
                ExtReal::Finite(v) => v.abs() - c.bound,
                ExtReal::PosInf => f64::INFINITY,
            };
            worst.record(i, v);
        }
    }

    let zero = vec![0.0; m];
    for spec in [phi, psi] {
        spec.validate()?;
        let v = match spec.evaluate(&zero)? {
            ExtReal::Finite(v) => v.abs(),
            ExtReal::PosInf => f64::INFINITY,
        };
        worst.record(8, v);
    }

    let compat = check_compatibility(phi, psi, coeffs, domain, &COMPAT_EPS, sample_count, seed)?;
    worst.record(9, compat.max_residual());

    let checks = NAMES
        .iter()
        .zip(worst.0)
        .map(|(&name, r)| AssumptionCheck { name, residual: r.max(0.0), passed: r <= tolerance })
        .collect();
    Ok(AssumptionReport { tolerance, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{PresetName, Problem};
    use std::sync::Arc;

    #[test]
    fn presets_pass() {
        for name in PresetName::ALL {
            let p = Problem::preset(name);
            let report = validate_assumptions(&p.domain, &p.coeffs, &p.phi, &p.psi, 2000, 3, 1e-8).unwrap();
            assert!(report.passed(), "{name}: {:?}", report.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn growth_violation_detected() {
        let mut p = Problem::preset(PresetName::Drifted);
        p.coeffs.driver = Arc::new(|_, _, y, o| o[0] = y[0] * y[0]);
        let report = validate_assumptions(&p.domain, &p.coeffs, &p.phi, &p.psi, 500, 3, 1e-8).unwrap();
        let growth = report.checks.iter().find(|c| c.name == "growth_f").unwrap();
        assert!(!growth.passed);
    }

    #[test]
    fn terminal_outside_obstacle_detected() {
        let p = Problem::preset(PresetName::ObstacleInterior);
        let coeffs = p.coeffs.with_scaled_terminal(3.0);
        let report = validate_assumptions(&p.domain, &coeffs, &p.phi, &p.psi, 500, 3, 1e-8).unwrap();
        assert!(!report.passed());
        assert_eq!(report.failures().next().unwrap().name, "terminal_bound_phi");
    }

    #[test]
    fn non_monotone_driver_detected() {
        let mut p = Problem::preset(PresetName::Heat);
        p.coeffs.driver = Arc::new(|_, _, y, o| o[0] = 0.5 * y[0]);
        p.coeffs.constants.gamma = 1.0;
        let report = validate_assumptions(&p.domain, &p.coeffs, &p.phi, &p.psi, 500, 3, 1e-8).unwrap();
        let mono = report.checks.iter().find(|c| c.name == "monotone_f").unwrap();
        assert!(!mono.passed);
    }
}
