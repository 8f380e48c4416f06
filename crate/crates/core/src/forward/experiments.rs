use rayon::prelude::*;

use super::{simulate_forward, CoefficientSet, Domain, ForwardPath, TimeGrid};
use crate::error::Result;
use crate::rng::StreamKey;
use crate::stats::{block_bootstrap_se, mean, Estimate};

/// Two starting points `(t, x)` and `(t', x')`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointPair {
    pub t: f64,
    pub x: Vec<f64>,
    pub t2: f64,
    pub x2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityRow {
    pub pair_id: usize,
    pub dx: f64,
    pub dt: f64,
    pub est_x: f64,
    pub est_a: f64,
    /// `(est_x + est_a) / (|x - x'|^p + |t - t'|^(p/2))`, zero when both vanish.
    pub ratio: f64,
    /// Standard error of `est_x + est_a`.
    pub se: f64,
}

fn sup_gap(a: &[f64], b: &[f64], dim: usize) -> f64 {
    a.chunks(dim)
        .zip(b.chunks(dim))
        .map(|(u, v)| u.iter().zip(v).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Estimates `E sup|X - X'|^p` and `E sup|A - A'|^p` for coupled paths.
/// Sample `i` of every pair uses stream `i` of `key`, so both members of a
/// pair (and all pairs) share their Brownian increments.
pub fn forward_continuity_experiment(
    domain: &Domain,
    coeffs: &CoefficientSet,
    grid: TimeGrid,
    pairs: &[PointPair],
    p: f64,
    n_paths: usize,
    key: StreamKey,
) -> Result<Vec<ContinuityRow>> {
    pairs
        .iter()
        .enumerate()
        .map(|(pair_id, pair)| {
            let samples: Vec<(f64, f64)> = (0..n_paths)
                .into_par_iter()
                .map(|i| -> Result<(f64, f64)> {
                    let p1 = simulate_forward(domain, coeffs, grid, pair.t, &pair.x, &mut key.stream(i as u64))?;
                    let p2 = simulate_forward(domain, coeffs, grid, pair.t2, &pair.x2, &mut key.stream(i as u64))?;
                    let gx = sup_gap(&p1.x, &p2.x, p1.dim).powf(p);
                    let ga = sup_gap(&p1.a, &p2.a, 1).powf(p);
                    Ok((gx, ga))
                })
                .collect::<Result<_>>()?;
            let (sx, sa): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
            let total: Vec<f64> = sx.iter().zip(&sa).map(|(a, b)| a + b).collect();
            let est = Estimate::from_samples(&total);
            let dx = pair.x.iter().zip(&pair.x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let dt = (pair.t - pair.t2).abs();
            let denom = dx.powf(p) + dt.powf(0.5 * p);
            let ratio = if denom > 0.0 { est.value / denom } else { 0.0 };
            Ok(ContinuityRow { pair_id, dx, dt, est_x: mean(&sx), est_a: mean(&sa), ratio, se: est.se })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpMoment {
    pub value: f64,
    pub se: f64,
    /// Block-bootstrap standard error divided by the estimate.
    pub bootstrap_cv: f64,
}

/// Estimates `E[exp(kappa A_T)]` from `(t, x)`.
#[allow(clippy::too_many_arguments)]
pub fn exponential_moment(
    domain: &Domain,
    coeffs: &CoefficientSet,
    grid: TimeGrid,
    t: f64,
    x: &[f64],
    kappa: f64,
    n_paths: usize,
    key: StreamKey,
) -> Result<ExpMoment> {
    let samples =
        super::map_paths(domain, coeffs, grid, t, x, n_paths, key, |p| (kappa * p.terminal_local_time()).exp())?;
    let est = Estimate::from_samples(&samples);
    let boot = block_bootstrap_se(&samples, 100, 200, key.child("bootstrap", 0), mean);
    Ok(ExpMoment { value: est.value, se: est.se, bootstrap_cv: boot / est.value })
}

/// Estimates `E[int_t^T h1(s, X_s) ds + int_t^T h2(s, X_s) dA_s]`.
#[allow(clippy::too_many_arguments)]
pub fn functional_expectation<H1, H2>(
    domain: &Domain,
    coeffs: &CoefficientSet,
    grid: TimeGrid,
    t: f64,
    x: &[f64],
    h1: H1,
    h2: H2,
    n_paths: usize,
    key: StreamKey,
) -> Result<Estimate>
where
    H1: Fn(f64, &[f64]) -> f64 + Sync,
    H2: Fn(f64, &[f64]) -> f64 + Sync,
{
    let samples = super::map_paths(domain, coeffs, grid, t, x, n_paths, key, |p: ForwardPath| {
        let dt = p.grid.dt();
        (p.start..p.grid.n_steps())
            .map(|i| {
                let s = p.grid.time(i);
                h1(s, p.x_at(i)) * dt + h2(p.grid.time(i + 1), p.x_at(i + 1)) * p.da(i)
            })
            .sum::<f64>()
    })?;
    Ok(Estimate::from_samples(&samples))
}
