use serde::{Deserialize, Serialize};

use crate::convex::{joint_resolvent, ConvexSpec, Envelope, MoreauParams, ProxOperator, SPLIT_MAX_ITER, SPLIT_TOL};
use crate::error::{Error, Result};
use crate::forward::CoefficientSet;

/// How the subdifferential terms enter a backward step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProxMode {
    /// Resolvents of `phi` and `psi` themselves.
    ExactResolvent,
    /// `phi`, `psi` replaced by their Moreau envelopes with parameter `epsilon`.
    MoreauPenalized { epsilon: f64 },
}

/// Composition of the two resolvents inside a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitOrder {
    /// `J^psi_dA after J^phi_dt`. The order is immaterial when one of the
    /// two functions is zero or both are equal.
    #[default]
    PsiAfterPhi,
    PhiAfterPsi,
    /// Joint resolvent of `dt phi + dA psi` by splitting; both selections
    /// are then subgradients at the returned point.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub prox_mode: ProxMode,
    pub split_order: SplitOrder,
    /// Polynomial degree of the regression basis.
    pub degree: usize,
    /// Cap on the lagged fixed-point iterations per step.
    pub n_inner: usize,
    /// Sup-norm tolerance of the fixed-point iteration.
    pub tol: f64,
    /// Estimate `Z` by regression (regression engine only).
    pub estimate_z: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            prox_mode: ProxMode::ExactResolvent,
            split_order: SplitOrder::PsiAfterPhi,
            degree: 6,
            n_inner: 200,
            tol: 1e-12,
            estimate_z: false,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if let ProxMode::MoreauPenalized { epsilon } = self.prox_mode {
            MoreauParams::new(epsilon)?;
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.n_inner == 0 {
            return Err(Error::InvalidArgument("n_inner must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub y: Vec<f64>,
    /// Selection for `phi`: `U dt` balances the `phi` resolvent.
    pub u: Vec<f64>,
    /// Selection for `psi`; zero when `dA = 0`.
    pub v: Vec<f64>,
    pub iterations: usize,
}

struct Resolved {
    y: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

fn diff_over(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| (p - q) / w).collect()
}

fn resolve<P: ProxOperator>(phi: &P, psi: &P, r: &[f64], dt: f64, da: f64, order: SplitOrder) -> Result<Resolved> {
    let zero = || vec![0.0; r.len()];
    match order {
        SplitOrder::PsiAfterPhi => {
            let p = phi.prox(dt, r)?;
            let u = diff_over(r, &p, dt);
            if da > 0.0 {
                let y = psi.prox(da, &p)?;
                let v = diff_over(&p, &y, da);
                Ok(Resolved { y, u, v })
            } else {
                Ok(Resolved { y: p, u, v: zero() })
            }
        }
        SplitOrder::PhiAfterPsi => {
            let (p, v) = if da > 0.0 {
                let p = psi.prox(da, r)?;
                let v = diff_over(r, &p, da);
                (p, v)
            } else {
                (r.to_vec(), zero())
            };
            let y = phi.prox(dt, &p)?;
            let u = diff_over(&p, &y, dt);
            Ok(Resolved { y, u, v })
        }
        SplitOrder::Joint => {
            let sol = joint_resolvent(&[(phi, dt), (psi, da)], r, SPLIT_TOL, SPLIT_MAX_ITER)?;
            let mut sel = sol.selections.into_iter();
            let u = sel.next().unwrap_or_else(zero);
            let v = if da > 0.0 { sel.next().unwrap_or_else(zero) } else { zero() };
            Ok(Resolved { y: sol.point, u, v })
        }
    }
}

/// One implicit step `Y + dt d phi(Y) + dA d psi(Y) ∋ E_next + dt f(Y) + dA g(Y)`,
/// with `f` and `g` lagged inside a fixed-point loop started at `E_next`.
#[allow(clippy::too_many_arguments)]
pub fn backward_step(
    e_next: &[f64],
    t: f64,
    x: &[f64],
    dt: f64,
    da: f64,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    params: &SolverParams,
) -> Result<StepResult> {
    let m = coeffs.value_dim;
    if e_next.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: e_next.len() });
    }
    if !(dt > 0.0) || !(da >= 0.0) {
        return Err(Error::InvalidArgument(format!("backward step needs dt > 0 and dA >= 0, got dt={dt}, dA={da}")));
    }
    let mut fv = vec![0.0; m];
    let mut gv = vec![0.0; m];
    let mut y = e_next.to_vec();
    let mut r = vec![0.0; m];
    let mut residual = f64::INFINITY;
    for iter in 1..=params.n_inner {
        (coeffs.driver)(t, x, &y, &mut fv);
        if da > 0.0 {
            (coeffs.boundary_driver)(t, x, &y, &mut gv);
        }
        for k in 0..m {
            r[k] = e_next[k] + dt * fv[k] + if da > 0.0 { da * gv[k] } else { 0.0 };
        }
        let res = match params.prox_mode {
            ProxMode::ExactResolvent => resolve(phi, psi, &r, dt, da, params.split_order)?,
            ProxMode::MoreauPenalized { epsilon } => {
                let eps = MoreauParams::new(epsilon)?;
                let (ephi, epsi) = (Envelope { spec: phi, eps }, Envelope { spec: psi, eps });
                resolve(&ephi, &epsi, &r, dt, da, params.split_order)?
            }
        };
        residual = res.y.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        y = res.y;
        if !residual.is_finite() {
            break;
        }
        if residual <= params.tol {
            return Ok(StepResult { y, u: res.u, v: res.v, iterations: iter });
        }
    }
    Err(Error::FixedPoint { iterations: params.n_inner, residual })
}
