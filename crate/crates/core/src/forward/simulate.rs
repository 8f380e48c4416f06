use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CoefficientSet, Domain};
use crate::error::{Error, Result};
use crate::rng::StreamKey;

/// Points with `ell >= -BOUNDARY_TOL` count as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Uniform grid `t_i = i T / N` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) || n_steps == 0 {
            return Err(Error::InvalidArgument(format!(
                "time grid needs T > 0 and N >= 1, got T={horizon}, N={n_steps}"
            )));
        }
        Ok(TimeGrid { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            self.horizon * i as f64 / self.n_steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Index of the grid point nearest to `t`.
    pub fn snap(&self, t: f64) -> usize {
        let i = (t / self.dt()).round();
        (i.max(0.0) as usize).min(self.n_steps)
    }
}

/// One discretized trajectory of `(W, X, A)` on the full grid. On the frozen
/// prefix `[0, t]` the state is `x`, and `W` and `A` vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPath {
    pub grid: TimeGrid,
    pub start: usize,
    pub dim: usize,
    /// Cumulative noise `W_s - W_t`, `(N + 1) * dim` values.
    pub w: Vec<f64>,
    /// States, `(N + 1) * dim` values.
    pub x: Vec<f64>,
    /// Local time, `N + 1` values.
    pub a: Vec<f64>,
}

impl ForwardPath {
    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn w_at(&self, i: usize) -> &[f64] {
        &self.w[i * self.dim..(i + 1) * self.dim]
    }

    pub fn da(&self, i: usize) -> f64 {
        self.a[i + 1] - self.a[i]
    }

    pub fn dw(&self, i: usize) -> Vec<f64> {
        self.w_at(i + 1).iter().zip(self.w_at(i)).map(|(a, b)| a - b).collect()
    }

    pub fn terminal_local_time(&self) -> f64 {
        self.a[self.grid.n_steps()]
    }
}

/// What happens to a predictor that leaves the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reflection {
    /// Implicit projection `X = P`, `dA = delta`. The state lands on the
    /// boundary whenever `dA > 0`.
    #[default]
    Projection,
    /// Mirror image `X = 2P - X~`, `dA = 2 delta`. The state is pushed back
    /// inside, so `dA > 0` no longer implies a boundary state; the one-step
    /// law is that of the reflected Gaussian, which removes the `O(sqrt dt)`
    /// weak error of the projection at the wall.
    Symmetrized,
}

/// Predictor `x + b dt + sigma dW` followed by the projection.
/// Returns the new state and the local-time increment.
pub fn euler_step(
    domain: &Domain,
    coeffs: &CoefficientSet,
    t: f64,
    x: &[f64],
    dt: f64,
    dw: &[f64],
) -> Result<(Vec<f64>, f64)> {
    euler_step_with(domain, coeffs, t, x, dt, dw, Reflection::Projection)
}

/// [`euler_step`] with a choice of reflection.
pub fn euler_step_with(
    domain: &Domain,
    coeffs: &CoefficientSet,
    t: f64,
    x: &[f64],
    dt: f64,
    dw: &[f64],
    reflection: Reflection,
) -> Result<(Vec<f64>, f64)> {
    let d = x.len();
    let mut b = vec![0.0; d];
    let mut sig = vec![0.0; d * d];
    (coeffs.drift)(t, x, &mut b);
    (coeffs.diffusion)(t, x, &mut sig);
    let predictor: Vec<f64> =
        (0..d).map(|i| x[i] + b[i] * dt + (0..d).map(|j| sig[i * d + j] * dw[j]).sum::<f64>()).collect();
    let (p, delta) = domain.project(&predictor, t + dt)?;
    if reflection == Reflection::Projection || delta == 0.0 {
        return Ok((p, delta));
    }
    let mirror: Vec<f64> = p.iter().zip(&predictor).map(|(a, b)| 2.0 * a - b).collect();
    let (back, extra) = domain.project(&mirror, t + dt)?;
    Ok((back, 2.0 * delta + extra))
}

pub fn simulate_forward<R: Rng + ?Sized>(
    domain: &Domain,
    coeffs: &CoefficientSet,
    grid: TimeGrid,
    t: f64,
    x: &[f64],
    rng: &mut R,
) -> Result<ForwardPath> {
    simulate_forward_with(domain, coeffs, grid, t, x, Reflection::Projection, rng)
}

/// [`simulate_forward`] with a choice of reflection.
pub fn simulate_forward_with<R: Rng + ?Sized>(
    domain: &Domain,
    coeffs: &CoefficientSet,
    grid: TimeGrid,
    t: f64,
    x: &[f64],
    reflection: Reflection,
    rng: &mut R,
) -> Result<ForwardPath> {
    let d = domain.dim();
    if x.len() != d || coeffs.state_dim != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    if !(0.0..=grid.horizon()).contains(&t) {
        return Err(Error::InvalidArgument(format!("start time {t} outside [0, {}]", grid.horizon())));
    }
    if !domain.contains_closure(x, BOUNDARY_TOL) {
        return Err(Error::InvalidArgument(format!("start point {x:?} outside the closed domain")));
    }
    let n = grid.n_steps();
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let start = grid.snap(t);
    let mut path = ForwardPath {
        grid,
        start,
        dim: d,
        w: vec![0.0; (n + 1) * d],
        x: Vec::with_capacity((n + 1) * d),
        a: vec![0.0; n + 1],
    };
    path.x.extend_from_slice(x);
    let mut dw = vec![0.0; d];
    let mut state = x.to_vec();
    for i in 0..n {
        // Increments are drawn on every cell so that paths started at
        // different times share the same noise on common cells.
        for v in dw.iter_mut() {
            *v = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        }
        if i < start {
            path.x.extend_from_slice(&state);
            continue;
        }
        let (next, delta) = euler_step_with(domain, coeffs, grid.time(i), &state, dt, &dw, reflection)?;
        for (k, inc) in dw.iter().enumerate() {
            path.w[(i + 1) * d + k] = path.w[i * d + k] + inc;
        }
        path.a[i + 1] = path.a[i] + delta;
        path.x.extend_from_slice(&next);
        state = next;
    }
    Ok(path)
}

/// Simulates `n_paths` independent paths in parallel and maps each through
/// `f` without keeping the path. Path `i` uses stream `i` of `key`.
#[allow(clippy::too_many_arguments)]
pub fn map_paths<T, F>(
    domain: &Domain,
    coeffs: &CoefficientSet,
    grid: TimeGrid,
    t: f64,
    x: &[f64],
    n_paths: usize,
    key: StreamKey,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(ForwardPath) -> T + Sync,
{
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.stream(i as u64);
            simulate_forward(domain, coeffs, grid, t, x, &mut rng).map(&f)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardEnsemble {
    pub grid: TimeGrid,
    pub start: usize,
    pub paths: Vec<ForwardPath>,
}

impl ForwardEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

pub fn simulate_ensemble(
    domain: &Domain,
    coeffs: &CoefficientSet,
    grid: TimeGrid,
    t: f64,
    x: &[f64],
    n_paths: usize,
    key: StreamKey,
) -> Result<ForwardEnsemble> {
    simulate_ensemble_with(domain, coeffs, grid, t, x, n_paths, Reflection::Projection, key)
}

/// [`simulate_ensemble`] with a choice of reflection.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ensemble_with(
    domain: &Domain,
    coeffs: &CoefficientSet,
    grid: TimeGrid,
    t: f64,
    x: &[f64],
    n_paths: usize,
    reflection: Reflection,
    key: StreamKey,
) -> Result<ForwardEnsemble> {
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = key.stream(i as u64);
            simulate_forward_with(domain, coeffs, grid, t, x, reflection, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForwardEnsemble { grid, start: grid.snap(t), paths })
}

/// Rebuilds `A` from the Itô expansion of `ell(X)` with left-point sums and
/// returns `sup_i |A_i - A^_i|`.
pub fn local_time_ito_residual(domain: &Domain, coeffs: &CoefficientSet, path: &ForwardPath) -> f64 {
    let d = path.dim;
    let dt = path.grid.dt();
    let x0 = path.x_at(path.start);
    let ell0 = domain.ell(x0);
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    let mut sig = vec![0.0; d * d];
    let mut integral = 0.0;
    let mut worst = 0.0f64;
    for i in path.start..path.grid.n_steps() {
        let t = path.grid.time(i);
        let x = path.x_at(i);
        domain.grad(x, &mut grad);
        domain.hessian(x, &mut hess);
        (coeffs.drift)(t, x, &mut b);
        (coeffs.diffusion)(t, x, &mut sig);
        // L ell = 1/2 tr(sigma sigma^T D^2 ell) + <b, grad ell>
        let mut gen = 0.0;
        for r in 0..d {
            for c in 0..d {
                let ss: f64 = (0..d).map(|k| sig[r * d + k] * sig[c * d + k]).sum();
                gen += 0.5 * ss * hess[r * d + c];
            }
            gen += b[r] * grad[r];
        }
        let dw = path.dw(i);
        let noise: f64 = (0..d).map(|r| grad[r] * (0..d).map(|k| sig[r * d + k] * dw[k]).sum::<f64>()).sum();
        integral += gen * dt + noise;
        let rebuilt = integral - (domain.ell(path.x_at(i + 1)) - ell0);
        worst = worst.max((path.a[i + 1] - rebuilt).abs());
    }
    worst
}
