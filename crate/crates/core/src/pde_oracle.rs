//! Finite-difference solver for the one-dimensional variational inequality
//!
//! ```text
//! u_t + L u + f(t, x, u) ∈ ∂φ(u)      in [0, T) × (lo, hi)
//! ∂u/∂n + ∂ψ(u) ∋ g(t, x, u)          on [0, T) × {lo, hi}
//! u(T, ·) = h
//! ```
//!
//! with `L = σ²/2 ∂xx + b ∂x`. Each step is a θ-scheme in reversed time for the
//! linear part followed by the resolvents: `J^φ_Δt` at every node and
//! `J^ψ_{Δt w}` on top of it at the two wall nodes. The Neumann condition enters
//! through a ghost node, which gives the wall weight `w = σ²/Δx + b n`.

use serde::{Deserialize, Serialize};

use crate::convex::ConvexSpec;
use crate::error::{Error, Result};
use crate::forward::{CoefficientSet, Domain};
use crate::valuefn::ValueSurface;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FDGrid {
    pub n_x: usize,
    pub n_t: usize,
    pub theta: f64,
}

impl Default for FDGrid {
    fn default() -> Self {
        FDGrid { n_x: 200, n_t: 2000, theta: 0.5 }
    }
}

impl FDGrid {
    pub fn new(n_x: usize, n_t: usize, theta: f64) -> Result<Self> {
        let g = FDGrid { n_x, n_t, theta };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_x < 3 {
            return Err(Error::InvalidArgument(format!("n_x = {} < 3", self.n_x)));
        }
        if self.n_t == 0 {
            return Err(Error::InvalidArgument("n_t must be positive".into()));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!("theta = {} outside [1/2, 1]", self.theta)));
        }
        Ok(())
    }

    /// Halves both steps: `2 n_x - 1` nodes, `2 n_t` steps.
    pub fn refined(&self) -> Self {
        FDGrid { n_x: 2 * self.n_x - 1, n_t: 2 * self.n_t, theta: self.theta }
    }
}

/// Solves `(sub, diag, sup) u = rhs` in place of `rhs`.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::LinearSolve("band lengths differ".into()));
    }
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::LinearSolve("zero pivot in row 0".into()));
    }
    c[0] = sup[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::LinearSolve(format!("zero pivot in row {i}")));
        }
        c[i] = sup[i] / denom;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Discrete generator on the node grid: `(L u)_j = lower_j u_{j-1} + mid_j u_j + upper_j u_{j+1}`,
/// with the ghost values folded into the wall rows, plus the wall weights.
struct Stencil {
    lower: Vec<f64>,
    mid: Vec<f64>,
    upper: Vec<f64>,
    wall: [f64; 2],
}

fn stencil(coeffs: &CoefficientSet, t: f64, xs: &[f64], dx: f64) -> Result<Stencil> {
    let n = xs.len();
    let mut lower = vec![0.0; n];
    let mut mid = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut wall = [0.0; 2];
    for (j, &x) in xs.iter().enumerate() {
        let b = coeffs.b(t, &[x])[0];
        let s = coeffs.sigma(t, &[x])[0];
        let a = 0.5 * s * s;
        let (lo_c, hi_c) = (a / (dx * dx) - b / (2.0 * dx), a / (dx * dx) + b / (2.0 * dx));
        if j == 0 || j == n - 1 {
            let normal = if j == 0 { -1.0 } else { 1.0 };
            let w = s * s / dx + b * normal;
            if w < 0.0 {
                return Err(Error::DiagonalDominance { weight: w });
            }
            wall[usize::from(j != 0)] = w;
            let c = 2.0 * a / (dx * dx);
            mid[j] = -c;
            if j == 0 {
                upper[j] = c;
            } else {
                lower[j] = c;
            }
        } else {
            lower[j] = lo_c;
            mid[j] = -2.0 * a / (dx * dx);
            upper[j] = hi_c;
        }
    }
    Ok(Stencil { lower, mid, upper, wall })
}

impl Stencil {
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        for j in 0..n {
            let mut v = self.mid[j] * u[j];
            if j > 0 {
                v += self.lower[j] * u[j - 1];
            }
            if j + 1 < n {
                v += self.upper[j] * u[j + 1];
            }
            out[j] = v;
        }
    }
}

/// Nodes `lo + j dx`, the last one set to `hi` exactly.
pub fn fd_nodes(domain: &Domain, n_x: usize) -> Result<Vec<f64>> {
    crate::backward::space_nodes(domain, n_x)
}

/// Trapezoid mass `∫ u dx` of one scalar row.
pub fn discrete_mass(xs: &[f64], row: &[f64]) -> f64 {
    xs.windows(2).zip(row.windows(2)).map(|(x, u)| 0.5 * (x[1] - x[0]) * (u[0] + u[1])).sum()
}

/// Solves the variational inequality backward from `u(T) = h` on `[0, T] × [lo, hi]`.
pub fn solve_pvi(
    domain: &Domain,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    grid: FDGrid,
) -> Result<ValueSurface> {
    grid.validate()?;
    if coeffs.state_dim != 1 || coeffs.value_dim != 1 {
        return Err(Error::InvalidArgument("the finite-difference oracle needs d = m = 1".into()));
    }
    if phi.dim() != 1 || psi.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: phi.dim().max(psi.dim()) });
    }
    let xs = fd_nodes(domain, grid.n_x)?;
    let n = xs.len();
    let dx = xs[1] - xs[0];
    let horizon = coeffs.horizon;
    let dt = horizon / grid.n_t as f64;
    let theta = grid.theta;
    let times: Vec<f64> = (0..=grid.n_t).map(|i| if i == grid.n_t { horizon } else { i as f64 * dt }).collect();
    let mut surface = ValueSurface::zeros(times.clone(), xs.clone(), 1);
    let mut u: Vec<f64> = xs.iter().map(|&x| coeffs.h(&[x])[0]).collect();
    surface.set_row(grid.n_t, &u);

    let fixed = if coeffs.time_homogeneous { Some(stencil(coeffs, 0.0, &xs, dx)?) } else { None };
    let mut lu = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let (mut sub, mut diag, mut sup) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);

    for i in (0..grid.n_t).rev() {
        let (t_old, t_new) = (times[i + 1], times[i]);
        let (s_old, s_new);
        let (old, new) = match &fixed {
            Some(s) => (s, s),
            None => {
                s_old = stencil(coeffs, t_old, &xs, dx)?;
                s_new = stencil(coeffs, t_new, &xs, dx)?;
                (&s_old, &s_new)
            }
        };
        old.apply(&u, &mut lu);
        for j in 0..n {
            let x = xs[j];
            let mut src = coeffs.f(t_old, &[x], &[u[j]])[0];
            if j == 0 || j == n - 1 {
                src += old.wall[usize::from(j != 0)] * coeffs.g(t_old, &[x], &[u[j]])[0];
            }
            rhs[j] = u[j] + (1.0 - theta) * dt * lu[j] + dt * src;
            sub[j] = -theta * dt * new.lower[j];
            diag[j] = 1.0 - theta * dt * new.mid[j];
            sup[j] = -theta * dt * new.upper[j];
        }
        thomas(&sub, &diag, &sup, &mut rhs)?;
        for j in 0..n {
            let mut v = phi.prox(dt, &[rhs[j]])?;
            if j == 0 || j == n - 1 {
                let w = new.wall[usize::from(j != 0)];
                if w > 0.0 {
                    v = psi.prox(dt * w, &v)?;
                }
            }
            u[j] = v[0];
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve(format!("non-finite value at t = {t_new}")));
        }
        surface.set_row(i, &u);
    }
    Ok(surface)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{PresetName, Problem};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn heat() -> Problem {
        Problem::preset(PresetName::Heat)
    }

    fn solve(p: &Problem, g: FDGrid) -> ValueSurface {
        solve_pvi(&p.domain, &p.coeffs, &p.phi, &p.psi, g).unwrap()
    }

    #[test]
    fn thomas_matches_dense() {
        let sub = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let sup = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, 2.0, -1.0, 0.5];
        let mut rhs: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i]
                    + if i > 0 { sub[i] * x[i - 1] } else { 0.0 }
                    + if i < 3 { sup[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        thomas(&sub, &diag, &sup, &mut rhs).unwrap();
        for (a, b) in rhs.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_data_stays_constant() {
        let mut p = heat();
        p.coeffs.terminal = Arc::new(|_, o| o[0] = 0.25);
        p.phi = ConvexSpec::indicator_box(vec![-1.0], vec![1.0]).unwrap();
        let s = solve(&p, FDGrid::new(41, 40, 0.5).unwrap());
        assert!(s.u.iter().all(|v| (v - 0.25).abs() < 1e-13));
    }

    #[test]
    fn mass_is_conserved() {
        let mut p = heat();
        p.coeffs.terminal = Arc::new(|x, o| o[0] = (3.0 * x[0]).exp() - x[0] * x[0]);
        let s = solve(&p, FDGrid::new(101, 200, 0.5).unwrap());
        let n = s.times.len() - 1;
        let m0 = discrete_mass(&s.xs, s.row(n));
        for i in (0..n).rev() {
            let step = discrete_mass(&s.xs, s.row(i)) - discrete_mass(&s.xs, s.row(i + 1));
            assert!(step.abs() < 1e-8, "step {i}: {step}");
        }
        assert!((discrete_mass(&s.xs, s.row(0)) - m0).abs() < 1e-8);
    }

    #[test]
    fn heat_matches_closed_form() {
        let s = solve(&heat(), FDGrid::default());
        let mut worst = 0.0f64;
        for (i, &t) in s.times.iter().enumerate() {
            for (j, &x) in s.xs.iter().enumerate() {
                let exact = (-PI * PI * (0.5 - t) / 2.0).exp() * (PI * x).cos();
                worst = worst.max((s.at(i, j)[0] - exact).abs());
            }
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn crank_nicolson_is_second_order() {
        let mut p = heat();
        p.coeffs.terminal = Arc::new(|x, o| {
            o[0] = (PI * x[0]).cos() + 0.3 * (2.0 * PI * x[0]).cos() + 0.1 * x[0].powi(3) * (x[0] * x[0] - 5.0 / 3.0)
        });
        let mut g = FDGrid::new(11, 10, 0.5).unwrap();
        let mut rows = Vec::new();
        for _ in 0..5 {
            let s = solve(&p, g);
            rows.push(s.row(0).to_vec());
            g = g.refined();
        }
        let gaps: Vec<f64> = rows
            .windows(2)
            .map(|w| w[0].iter().enumerate().map(|(j, a)| (a - w[1][2 * j]).abs()).fold(0.0, f64::max))
            .collect();
        for w in gaps.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.3, "{gaps:?}");
        }
    }

    #[test]
    fn obstacle_keeps_the_box() {
        let mut p = Problem::preset(PresetName::ObstacleInterior);
        p.phi = ConvexSpec::indicator_box(vec![-0.6], vec![0.6]).unwrap();
        let s = solve(&p, FDGrid::new(81, 200, 0.5).unwrap());
        assert!(s.u.iter().all(|v| v.abs() <= 0.6));
        assert!(s.u.contains(&0.6));
    }

    #[test]
    fn boundary_obstacle_caps_walls_only() {
        let p = Problem::preset(PresetName::ObstacleBoundary);
        let s = solve(&p, FDGrid::new(81, 400, 0.5).unwrap());
        let nx = s.xs.len();
        for i in 0..s.times.len() {
            assert!(s.at(i, 0)[0] <= 0.3 && s.at(i, nx - 1)[0] <= 0.3);
        }
        assert!(s.is_finite());
    }

    #[test]
    fn monotone_in_terminal_data() {
        let p = Problem::preset(PresetName::ObstacleInterior);
        let mut q = p.clone();
        let h = p.coeffs.terminal.clone();
        q.coeffs.terminal = Arc::new(move |x, o| {
            h(x, o);
            o[0] += 0.05 * (1.0 + x[0]);
        });
        let g = FDGrid::new(41, 400, 1.0).unwrap();
        let (a, b) = (solve(&p, g), solve(&q, g));
        assert!(a.u.iter().zip(&b.u).all(|(x, y)| y >= x));
    }

    #[test]
    fn rejects_negative_wall_weight() {
        let mut p = heat();
        p.coeffs.drift = Arc::new(|_, _, o| o[0] = 50.0);
        let err = solve_pvi(&p.domain, &p.coeffs, &p.phi, &p.psi, FDGrid::new(11, 10, 0.5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::DiagonalDominance { .. }));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(FDGrid::new(2, 10, 0.5).is_err());
        assert!(FDGrid::new(10, 10, 0.4).is_err());
        assert!(FDGrid::new(10, 0, 0.5).is_err());
    }
}
