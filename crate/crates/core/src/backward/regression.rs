use std::fmt::Write as _;

use rayon::prelude::*;

use super::grid::contraction_warning;
use super::step::{backward_step, SolverParams};
use crate::convex::ConvexSpec;
use crate::error::{Error, Result};
use crate::forward::{CoefficientSet, ForwardEnsemble, TimeGrid};
use crate::regress;
use crate::rng::StreamKey;
use crate::stats::{block_bootstrap_se, mean, Estimate};

pub const MIN_REGRESSION_PATHS: usize = 1000;
const BOOTSTRAP_BLOCKS: usize = 50;
const BOOTSTRAP_REPS: usize = 200;

/// Pathwise solution `(Y, U, V, K1, K2, M)` on the forward grid.
///
/// Arrays are time-major: entry `(i, j)` of a field with `c` components
/// lives at `(i * n_paths + j) * c`. `U`, `V`, the local-time increment and
/// the martingale increment at index `i` belong to the step `[t_i, t_{i+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardSolution {
    pub grid: TimeGrid,
    pub start: usize,
    pub n_paths: usize,
    pub m: usize,
    pub d: usize,
    pub x: Vec<f64>,
    pub da: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub m_inc: Vec<f64>,
    /// `m * d` entries per node when requested.
    pub z_est: Option<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl BackwardSolution {
    fn slot(&self, path: usize, i: usize, c: usize) -> std::ops::Range<usize> {
        let o = (i * self.n_paths + path) * c;
        o..o + c
    }

    pub fn n_times(&self) -> usize {
        self.grid.n_steps() + 1
    }

    pub fn x_at(&self, path: usize, i: usize) -> &[f64] {
        &self.x[self.slot(path, i, self.d)]
    }

    pub fn da_at(&self, path: usize, i: usize) -> f64 {
        self.da[i * self.n_paths + path]
    }

    pub fn y_at(&self, path: usize, i: usize) -> &[f64] {
        &self.y[self.slot(path, i, self.m)]
    }

    pub fn u_at(&self, path: usize, i: usize) -> &[f64] {
        &self.u[self.slot(path, i, self.m)]
    }

    pub fn v_at(&self, path: usize, i: usize) -> &[f64] {
        &self.v[self.slot(path, i, self.m)]
    }

    pub fn k1_at(&self, path: usize, i: usize) -> &[f64] {
        &self.k1[self.slot(path, i, self.m)]
    }

    pub fn k2_at(&self, path: usize, i: usize) -> &[f64] {
        &self.k2[self.slot(path, i, self.m)]
    }

    pub fn m_inc_at(&self, path: usize, i: usize) -> &[f64] {
        &self.m_inc[self.slot(path, i, self.m)]
    }

    /// Cumulative martingale `M_i = sum_{l < i} M_inc_l`, component `c`.
    pub fn martingale_path(&self, path: usize, c: usize) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.n_times());
        for i in 0..self.n_times() {
            out.push(acc);
            acc += self.m_inc_at(path, i)[c];
        }
        out
    }

    /// Component `c` of `Y` along one path.
    pub fn y_path(&self, path: usize, c: usize) -> Vec<f64> {
        (0..self.n_times()).map(|i| self.y_at(path, i)[c]).collect()
    }

    pub fn k1_path(&self, path: usize, c: usize) -> Vec<f64> {
        (0..self.n_times()).map(|i| self.k1_at(path, i)[c]).collect()
    }

    pub fn k2_path(&self, path: usize, c: usize) -> Vec<f64> {
        (0..self.n_times()).map(|i| self.k2_at(path, i)[c]).collect()
    }

    /// `Y` at the start time, averaged over paths, with a block-bootstrap SE.
    ///
    /// All paths share the start state, so `Y` there carries no spread of its
    /// own; the bootstrap runs on `Y_start + M_T`, which has the same mean
    /// and carries the sampling noise of every fitted conditional expectation.
    pub fn y0(&self, key: StreamKey) -> Vec<Estimate> {
        (0..self.m)
            .map(|c| {
                let vals: Vec<f64> = (0..self.n_paths).map(|j| self.y_at(j, self.start)[c]).collect();
                let noisy: Vec<f64> = (0..self.n_paths)
                    .map(|j| self.y_at(j, self.start)[c] + self.martingale_path(j, c)[self.n_times() - 1])
                    .collect();
                let se = block_bootstrap_se(&noisy, BOOTSTRAP_BLOCKS, BOOTSTRAP_REPS, key.child("y0", c as u64), mean);
                Estimate { value: mean(&vals), se }
            })
            .collect()
    }

    /// `path_id,t,Y,U,V,K1,K2` rows for the first `max_paths` paths.
    pub fn paths_csv(&self, max_paths: usize) -> String {
        let mut out = String::from("path_id,t");
        for name in ["Y", "U", "V", "K1", "K2"] {
            if self.m == 1 {
                let _ = write!(out, ",{name}");
            } else {
                for c in 0..self.m {
                    let _ = write!(out, ",{name}{c}");
                }
            }
        }
        out.push('\n');
        for j in 0..self.n_paths.min(max_paths) {
            for i in 0..self.n_times() {
                let _ = write!(out, "{j},{}", self.grid.time(i));
                for field in [self.y_at(j, i), self.u_at(j, i), self.v_at(j, i), self.k1_at(j, i), self.k2_at(j, i)] {
                    for v in field {
                        let _ = write!(out, ",{v}");
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Least-squares Monte Carlo: `E[Y_{i+1} | X_i]` is fitted on a polynomial
/// basis of `X_i`, then each path takes a resolvent step with its own
/// local-time increment.
pub fn solve_regression(
    ensemble: &ForwardEnsemble,
    coeffs: &CoefficientSet,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    params: &SolverParams,
) -> Result<BackwardSolution> {
    params.validate()?;
    let n_paths = ensemble.len();
    if n_paths < MIN_REGRESSION_PATHS {
        return Err(Error::EnsembleTooSmall { got: n_paths, min: MIN_REGRESSION_PATHS });
    }
    if params.degree == 0 {
        return Err(Error::InvalidArgument("regression basis degree must be at least 1".into()));
    }
    let grid = ensemble.grid;
    let start = ensemble.start;
    let n = grid.n_steps();
    let dt = grid.dt();
    let d = ensemble.paths[0].dim;
    let m = coeffs.value_dim;
    let nt = n + 1;

    let mut x = vec![0.0; nt * n_paths * d];
    let mut da = vec![0.0; nt * n_paths];
    for (j, p) in ensemble.paths.iter().enumerate() {
        for i in 0..nt {
            x[(i * n_paths + j) * d..(i * n_paths + j + 1) * d].copy_from_slice(p.x_at(i));
            if i < n {
                da[i * n_paths + j] = p.da(i);
            }
        }
    }

    let field = || vec![0.0; nt * n_paths * m];
    let (mut y, mut u, mut v, mut m_inc) = (field(), field(), field(), field());
    let mut z_est = params.estimate_z.then(|| vec![0.0; nt * n_paths * m * d]);
    for j in 0..n_paths {
        let h = coeffs.h(&x[(n * n_paths + j) * d..(n * n_paths + j + 1) * d]);
        y[(n * n_paths + j) * m..(n * n_paths + j + 1) * m].copy_from_slice(&h);
    }

    for i in (start..n).rev() {
        let t = grid.time(i);
        let states = &x[i * n_paths * d..(i + 1) * n_paths * d];
        let targets = y[(i + 1) * n_paths * m..(i + 2) * n_paths * m].to_vec();
        let fit = regress::least_squares(states, d, &targets, m, params.degree)?;
        let steps = (0..n_paths)
            .into_par_iter()
            .map(|j| {
                let xj = &states[j * d..(j + 1) * d];
                let mut e_next = vec![0.0; m];
                fit.predict(xj, &mut e_next);
                let step = backward_step(&e_next, t, xj, dt, da[i * n_paths + j], coeffs, phi, psi, params)?;
                Ok((e_next, step))
            })
            .collect::<Result<Vec<_>>>()?;
        for (j, (e_next, step)) in steps.into_iter().enumerate() {
            let o = (i * n_paths + j) * m;
            y[o..o + m].copy_from_slice(&step.y);
            u[o..o + m].copy_from_slice(&step.u);
            v[o..o + m].copy_from_slice(&step.v);
            for c in 0..m {
                m_inc[o + c] = targets[j * m + c] - e_next[c];
            }
        }
        if let Some(z) = z_est.as_mut() {
            let zt: Vec<f64> = (0..n_paths)
                .flat_map(|j| {
                    let dw = ensemble.paths[j].dw(i);
                    let inc = &m_inc[(i * n_paths + j) * m..(i * n_paths + j + 1) * m];
                    let mut row = Vec::with_capacity(m * d);
                    for mi in inc {
                        row.extend(dw.iter().map(|w| mi * w / dt));
                    }
                    row
                })
                .collect();
            let zfit = regress::least_squares(states, d, &zt, m * d, params.degree)?;
            for j in 0..n_paths {
                let o = (i * n_paths + j) * m * d;
                zfit.predict(&states[j * d..(j + 1) * d], &mut z[o..o + m * d]);
            }
        }
    }
    for i in 0..start {
        let (src, dst) = (start * n_paths * m, i * n_paths * m);
        y.copy_within(src..src + n_paths * m, dst);
    }

    let mut k1 = field();
    let mut k2 = field();
    for i in start..n {
        for j in 0..n_paths {
            let (o, o1) = ((i * n_paths + j) * m, ((i + 1) * n_paths + j) * m);
            for c in 0..m {
                k1[o1 + c] = k1[o + c] + u[o + c] * dt;
                k2[o1 + c] = k2[o + c] + v[o + c] * da[i * n_paths + j];
            }
        }
    }
    let max_da = da.iter().copied().fold(0.0, f64::max);
    let warnings = contraction_warning(coeffs, dt, max_da).into_iter().collect();
    Ok(BackwardSolution { grid, start, n_paths, m, d, x, da, y, u, v, k1, k2, m_inc, z_est, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::simulate_ensemble;
    use crate::presets::{PresetName, Problem};
    use std::sync::Arc;

    fn run(p: &Problem, t: f64, x: f64, n_steps: usize, n_paths: usize) -> BackwardSolution {
        let grid = TimeGrid::new(p.coeffs.horizon, n_steps).unwrap();
        let ens = simulate_ensemble(&p.domain, &p.coeffs, grid, t, &[x], n_paths, StreamKey::new(2, "r")).unwrap();
        solve_regression(&ens, &p.coeffs, &p.phi, &p.psi, &SolverParams::default()).unwrap()
    }

    #[test]
    fn deterministic_flow_matches_direct_recursion() {
        let p = Problem::preset(PresetName::LinearOde);
        let sol = run(&p, 0.0, 0.4, 100, 1000);
        let dt = 0.01;
        let mut y = 1.0 + 0.5 * 0.4 * 0.4;
        for _ in 0..100 {
            y /= 1.0 + dt;
        }
        for j in [0, 500, 999] {
            assert!((sol.y_at(j, 0)[0] - y).abs() < 1e-10);
        }
    }

    #[test]
    fn box_constraint_holds_on_every_path() {
        let mut p = Problem::preset(PresetName::Drifted);
        p.phi = ConvexSpec::indicator_box(vec![-0.7], vec![0.7]).unwrap();
        p.coeffs.terminal = Arc::new(|x, o| o[0] = 0.5 * x[0]);
        let sol = run(&p, 0.0, 0.2, 50, 1000);
        assert!(sol.y.iter().all(|v| (-0.7..=0.7).contains(v)));
    }

    #[test]
    fn frozen_prefix_and_accumulators() {
        let p = Problem::preset(PresetName::ObstacleInterior);
        let sol = run(&p, 0.2, 0.0, 50, 1000);
        assert_eq!(sol.start, 20);
        for j in 0..sol.n_paths {
            for i in 0..=sol.start {
                assert_eq!(sol.k1_at(j, i), &[0.0]);
                assert_eq!(sol.k2_at(j, i), &[0.0]);
                assert_eq!(sol.y_at(j, i), sol.y_at(j, sol.start));
            }
            let last = sol.n_times() - 1;
            let expect: f64 = (sol.start..last).map(|i| sol.u_at(j, i)[0] * sol.grid.dt()).sum();
            assert!((sol.k1_at(j, last)[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn small_ensembles_are_rejected() {
        let p = Problem::preset(PresetName::Heat);
        let grid = TimeGrid::new(0.5, 10).unwrap();
        let ens = simulate_ensemble(&p.domain, &p.coeffs, grid, 0.0, &[0.0], 10, StreamKey::new(2, "r")).unwrap();
        assert!(matches!(
            solve_regression(&ens, &p.coeffs, &p.phi, &p.psi, &SolverParams::default()),
            Err(Error::EnsembleTooSmall { .. })
        ));
    }
}
