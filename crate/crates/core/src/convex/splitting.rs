//! Product-space Douglas–Rachford splitting for the resolvent of a weighted
//! sum `y + sum_i w_i d phi_i(y) ∋ r`.
//!
//! The quadratic `|y - r|^2 / 2` is shared equally among the `n` parts, so
//! each part's proximal step is a rescaled call of its own resolvent.
//! The dual selections `u_i ∈ d phi_i(y)` are read off the prox optimality
//! conditions and satisfy `y + sum_i w_i u_i = r` at the fixed point.

use super::{ConvexSpec, MoreauParams};
use crate::error::{Error, Result};

/// A convex function accessed through its resolvent.
pub trait ProxOperator {
    /// `(I + lambda d phi)^{-1}(y)`.
    fn prox(&self, lambda: f64, y: &[f64]) -> Result<Vec<f64>>;
    fn is_zero(&self) -> bool;
}

impl ProxOperator for ConvexSpec {
    fn prox(&self, lambda: f64, y: &[f64]) -> Result<Vec<f64>> {
        ConvexSpec::prox(self, lambda, y)
    }

    fn is_zero(&self) -> bool {
        ConvexSpec::is_zero(self)
    }
}

/// The Moreau envelope `phi_eps` as a convex function of its own.
#[derive(Debug, Clone, Copy)]
pub struct Envelope<'a> {
    pub spec: &'a ConvexSpec,
    pub eps: MoreauParams,
}

impl ProxOperator for Envelope<'_> {
    /// Closed form `y - lambda / (lambda + eps) (y - J_{lambda + eps}(y))`.
    fn prox(&self, lambda: f64, y: &[f64]) -> Result<Vec<f64>> {
        let e = self.eps.epsilon();
        let j = self.spec.prox(lambda + e, y)?;
        let w = lambda / (lambda + e);
        Ok(y.iter().zip(&j).map(|(a, b)| a - w * (a - b)).collect())
    }

    fn is_zero(&self) -> bool {
        self.spec.is_zero()
    }
}

/// Solution of the joint inclusion together with one selection per part.
#[derive(Debug, Clone, PartialEq)]
pub struct JointResolvent {
    pub point: Vec<f64>,
    pub selections: Vec<Vec<f64>>,
    pub iterations: usize,
}

pub fn joint_resolvent<P: ProxOperator + ?Sized>(
    parts: &[(&P, f64)],
    r: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<JointResolvent> {
    let m = r.len();
    let active: Vec<usize> = (0..parts.len()).filter(|&i| parts[i].1 > 0.0 && !parts[i].0.is_zero()).collect();
    let zero_sel = || vec![0.0; m];

    match active.len() {
        0 => {
            return Ok(JointResolvent { point: r.to_vec(), selections: vec![zero_sel(); parts.len()], iterations: 0 });
        }
        1 => {
            let i = active[0];
            let (spec, w) = parts[i];
            let y = spec.prox(w, r)?;
            let mut selections = vec![zero_sel(); parts.len()];
            selections[i] = r.iter().zip(&y).map(|(a, b)| (a - b) / w).collect();
            return Ok(JointResolvent { point: y, selections, iterations: 1 });
        }
        _ => {}
    }

    let n = active.len() as f64;
    // step gamma = n gives prox_i(z) = J^{phi_i}_{n w_i / 2}((z + r) / 2)
    let gamma = n;
    let scale = 1.0 + gamma / n;
    let mut z: Vec<Vec<f64>> = vec![r.to_vec(); active.len()];
    let mut x: Vec<Vec<f64>> = vec![vec![0.0; m]; active.len()];
    let mut shifted = vec![0.0; m];
    let mut residual = f64::INFINITY;

    for iter in 1..=max_iter {
        for (k, &i) in active.iter().enumerate() {
            let (spec, w) = parts[i];
            for c in 0..m {
                shifted[c] = (z[k][c] + gamma * r[c] / n) / scale;
            }
            x[k] = spec.prox(gamma * w / scale, &shifted)?;
        }
        let mut p = vec![0.0; m];
        for k in 0..active.len() {
            for c in 0..m {
                p[c] += (2.0 * x[k][c] - z[k][c]) / n;
            }
        }
        residual = 0.0;
        for k in 0..active.len() {
            for c in 0..m {
                let step = p[c] - x[k][c];
                z[k][c] += step;
                residual = residual.max(step.abs());
            }
        }
        if residual <= tol {
            let mut point = vec![0.0; m];
            for xk in &x {
                for c in 0..m {
                    point[c] += xk[c] / n;
                }
            }
            let mut selections = vec![zero_sel(); parts.len()];
            for (k, &i) in active.iter().enumerate() {
                let w = parts[i].1;
                selections[i] = (0..m).map(|c| (z[k][c] + gamma * r[c] / n - scale * x[k][c]) / (gamma * w)).collect();
            }
            return Ok(JointResolvent { point, selections, iterations: iter });
        }
    }
    Err(Error::SolverFailure { iterations: max_iter, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selections_balance_the_inclusion() {
        let a = ConvexSpec::indicator_box(vec![-0.5], vec![0.8]).unwrap();
        let b = ConvexSpec::abs_norm(1.0, 1).unwrap();
        for r in [-3.0, -0.2, 0.4, 1.3, 4.0] {
            let sol = joint_resolvent(&[(&a, 0.3), (&b, 0.7)], &[r], 1e-12, 10_000).unwrap();
            let y = sol.point[0];
            let balance = y + 0.3 * sol.selections[0][0] + 0.7 * sol.selections[1][0] - r;
            assert!(balance.abs() < 1e-9, "r={r} balance={balance}");
            // prox of |.| on [-0.5, 0.8] with weight 0.7: clamp of soft threshold
            let expect = (r.signum() * (r.abs() - 0.7).max(0.0)).clamp(-0.5, 0.8);
            assert!((y - expect).abs() < 1e-9, "r={r}: {y} vs {expect}");
        }
    }

    #[test]
    fn single_active_part_is_direct() {
        let a = ConvexSpec::indicator_box(vec![-1.0], vec![1.0]).unwrap();
        let z = ConvexSpec::zero(1);
        let sol = joint_resolvent(&[(&z, 1.0), (&a, 0.5)], &[3.0], 1e-10, 10).unwrap();
        assert_eq!(sol.point, vec![1.0]);
        assert_eq!(sol.selections[1], vec![4.0]);
        assert_eq!(sol.selections[0], vec![0.0]);
    }

    #[test]
    fn envelope_prox_matches_gradient_equation() {
        let spec = ConvexSpec::indicator_box(vec![-1.0], vec![1.0]).unwrap();
        let eps = MoreauParams::new(0.1).unwrap();
        let env = Envelope { spec: &spec, eps };
        for r in [-4.0, -1.05, 0.3, 1.2, 6.0] {
            let y = env.prox(0.5, &[r]).unwrap();
            let g = spec.moreau_gradient(eps, &y).unwrap();
            assert!((y[0] + 0.5 * g[0] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let a = ConvexSpec::indicator_box(vec![-0.5], vec![0.8]).unwrap();
        let b = ConvexSpec::abs_norm(1.0, 1).unwrap();
        match joint_resolvent(&[(&a, 1.0), (&b, 1.0)], &[5.0], 0.0, 3) {
            Err(Error::SolverFailure { iterations: 3, residual }) => assert!(residual >= 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
