use rayon::prelude::*;

use super::step::{backward_step, SolverParams};
use super::transition::{transition_rows, Transition, TransitionRow};
use crate::convex::ConvexSpec;
use crate::error::{Error, Result};
use crate::forward::{CoefficientSet, Domain, TimeGrid};
use crate::rng::StreamKey;
use crate::valuefn::ValueSurface;

/// Dynamic-programming solution on a `(t_i, x_j)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub surface: ValueSurface,
    /// `phi` selection per node.
    pub u_sel: ValueSurface,
    /// `psi` selection per node.
    pub v_sel: ValueSurface,
    /// Expected local-time increment per node over the following step.
    pub da: ValueSurface,
    pub warnings: Vec<String>,
}

/// `n` equally spaced nodes covering the closed interval.
pub fn space_nodes(domain: &Domain, n: usize) -> Result<Vec<f64>> {
    let (lo, hi) =
        domain.bounds_1d().ok_or_else(|| Error::InvalidArgument("grid engine needs an interval domain".into()))?;
    if n < 2 {
        return Err(Error::InvalidArgument("space grid needs at least two nodes".into()));
    }
    Ok((0..n).map(|j| if j == n - 1 { hi } else { lo + (hi - lo) * j as f64 / (n - 1) as f64 }).collect())
}

pub(crate) fn contraction_warning(coeffs: &CoefficientSet, dt: f64, max_da: f64) -> Option<String> {
    let c = coeffs.constants;
    let factor = (c.beta + c.gamma) * (dt + max_da);
    (factor >= 1.0).then(|| format!("(beta + gamma)(dt + dA) = {factor:.3} >= 1; the inner iteration may not contract"))
}

#[allow(clippy::too_many_arguments)]
pub fn solve_grid(
    domain: &Domain,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    grid: TimeGrid,
    n_space: usize,
    transition: Transition,
    params: &SolverParams,
    key: StreamKey,
) -> Result<GridSolution> {
    params.validate()?;
    let xs = space_nodes(domain, n_space)?;
    let m = coeffs.value_dim;
    let n = grid.n_steps();
    let dt = grid.dt();
    let times = grid.times();
    let mut surface = ValueSurface::zeros(times.clone(), xs.clone(), m);
    let mut u_sel = ValueSurface::zeros(times.clone(), xs.clone(), m);
    let mut v_sel = ValueSurface::zeros(times.clone(), xs.clone(), m);
    let mut da_s = ValueSurface::zeros(times, xs.clone(), 1);

    let terminal: Vec<f64> = xs.iter().flat_map(|&x| coeffs.h(&[x])).collect();
    surface.set_row(n, &terminal);

    let slice_rows = |i: usize| -> Result<Vec<TransitionRow>> {
        let slice_key = key.child("slice", if coeffs.time_homogeneous { 0 } else { i as u64 });
        transition_rows(domain, coeffs, grid.time(i), &xs, dt, transition, slice_key)
    };
    let cached = if coeffs.time_homogeneous { Some(slice_rows(0)?) } else { None };
    let mut max_da = 0.0f64;

    for i in (0..n).rev() {
        let fresh;
        let rows = match &cached {
            Some(r) => r,
            None => {
                fresh = slice_rows(i)?;
                &fresh
            }
        };
        let t = grid.time(i);
        let next = surface.row(i + 1).to_vec();
        let results = rows
            .par_iter()
            .zip(xs.par_iter())
            .map(|(row, &x)| {
                let mut e_next = vec![0.0; m];
                row.apply(&next, m, &mut e_next);
                backward_step(&e_next, t, &[x], dt, row.da, coeffs, phi, psi, params)
            })
            .collect::<Result<Vec<_>>>()?;
        for (j, (res, row)) in results.iter().zip(rows.iter()).enumerate() {
            surface.set(i, j, &res.y);
            u_sel.set(i, j, &res.u);
            v_sel.set(i, j, &res.v);
            da_s.set(i, j, &[row.da]);
            max_da = max_da.max(row.da);
        }
    }
    let warnings = contraction_warning(coeffs, dt, max_da).into_iter().collect();
    Ok(GridSolution { surface, u_sel, v_sel, da: da_s, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{PresetName, Problem};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn solve(p: &Problem, nt: usize, nx: usize, tr: Transition) -> GridSolution {
        let grid = TimeGrid::new(p.coeffs.horizon, nt).unwrap();
        solve_grid(&p.domain, &p.coeffs, &p.phi, &p.psi, grid, nx, tr, &SolverParams::default(), StreamKey::new(1, "g"))
            .unwrap()
    }

    #[test]
    fn constant_terminal_is_preserved() {
        let mut p = Problem::preset(PresetName::Heat);
        p.coeffs.terminal = Arc::new(|_, o| o[0] = 0.4);
        let sol = solve(&p, 20, 21, Transition::ExactGaussianProjected);
        assert!(sol.surface.u.iter().all(|v| (v - 0.4).abs() < 1e-14));
    }

    #[test]
    fn terminal_row_is_exact() {
        let p = Problem::preset(PresetName::Drifted);
        let sol = solve(&p, 10, 15, Transition::ExactGaussianProjected);
        let n = sol.surface.times.len() - 1;
        for (j, &x) in sol.surface.xs.iter().enumerate() {
            assert_eq!(sol.surface.at(n, j), p.coeffs.h(&[x]).as_slice());
        }
    }

    fn heat_gap(tr: Transition) -> f64 {
        // cos(pi x) is a Neumann eigenfunction: u = exp(-pi^2 (T - t) / 2) cos(pi x)
        let p = Problem::preset(PresetName::Heat);
        let sol = solve(&p, 50, 50, tr);
        let mut worst = 0.0f64;
        for (i, &t) in sol.surface.times.iter().enumerate() {
            for (j, &x) in sol.surface.xs.iter().enumerate() {
                let exact = (-PI * PI * (0.5 - t) / 2.0).exp() * (PI * x).cos();
                worst = worst.max((sol.surface.at(i, j)[0] - exact).abs());
            }
        }
        worst
    }

    #[test]
    fn heat_matches_closed_form() {
        assert!(heat_gap(Transition::ReflectedGaussian) < 2e-2);
    }

    #[test]
    fn clamped_kernel_is_biased_at_the_wall() {
        let (clamped, reflected) =
            (heat_gap(Transition::ExactGaussianProjected), heat_gap(Transition::ReflectedGaussian));
        assert!(clamped > 2.0 * reflected);
        assert!(clamped < 0.15);
    }

    #[test]
    fn symmetric_data_gives_even_surface() {
        let p = Problem::preset(PresetName::ObstacleInterior);
        let sol = solve(&p, 30, 31, Transition::ExactGaussianProjected);
        let nx = sol.surface.xs.len();
        for i in 0..sol.surface.times.len() {
            for j in 0..nx {
                assert!((sol.surface.at(i, j)[0] - sol.surface.at(i, nx - 1 - j)[0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn obstacle_caps_the_surface() {
        let p = Problem::preset(PresetName::ObstacleInterior);
        let sol = solve(&p, 30, 31, Transition::ExactGaussianProjected);
        assert!(sol.surface.u.iter().all(|v| *v <= 0.6));
        assert!(sol.surface.u.contains(&0.6));
    }
}
