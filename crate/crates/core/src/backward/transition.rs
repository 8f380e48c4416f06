//! One-step transition weights of the reflected scheme on a 1-D node grid.
//!
//! A node value `u` is extended to the interval by linear interpolation, so
//! `E[u(X_1) | X_0 = x_j] = sum_k p_jk u_k` with `p_jk = E[hat_k(X_1)]`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{euler_step, CoefficientSet, Domain};
use crate::rng::StreamKey;
use crate::stats::{norm_cdf, norm_pdf};

/// Rows must sum to one within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Gaussian mass beyond this many standard deviations is ignored.
const TAIL_SDS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transition {
    /// Gaussian predictor clamped to the interval, integrated in closed form.
    ExactGaussianProjected,
    /// Method of images for the reflected Gaussian; the expected local time
    /// is that of a Brownian motion reflected at the nearer wall.
    ReflectedGaussian,
    /// `n_paths` simulated scheme steps per node.
    Mc { n_paths: usize },
}

/// Nonzero weights `weights[k - first]` and the expected local-time increment.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub first: usize,
    pub weights: Vec<f64>,
    pub da: f64,
}

impl TransitionRow {
    fn from_dense(dense: Vec<f64>, da: f64) -> Self {
        let first = dense.iter().position(|w| *w != 0.0).unwrap_or(0);
        let last = dense.iter().rposition(|w| *w != 0.0).unwrap_or(0);
        TransitionRow { first, weights: dense[first..=last].to_vec(), da }
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `sum_k p_k values[k]` for node values of dimension `m`.
    pub fn apply(&self, values: &[f64], m: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (off, w) in self.weights.iter().enumerate() {
            let k = self.first + off;
            for c in 0..m {
                out[c] += w * values[k * m + c];
            }
        }
    }
}

/// Adds `E[hat_k(Y); a < Y < b]` for `Y ~ N(mu, s^2)` restricted to cell `[x_c, x_{c+1}]`.
fn add_cell(xs: &[f64], c: usize, mu: f64, s: f64, dense: &mut [f64]) {
    let (a, b) = (xs[c], xs[c + 1]);
    let (za, zb) = ((a - mu) / s, (b - mu) / s);
    let mass = norm_cdf(zb) - norm_cdf(za);
    let first = mu * mass - s * (norm_pdf(zb) - norm_pdf(za));
    let h = b - a;
    dense[c + 1] += (first - a * mass) / h;
    dense[c] += (b * mass - first) / h;
}

fn interpolation_weights(xs: &[f64], y: f64, dense: &mut [f64], weight: f64) {
    let n = xs.len();
    let k = xs.partition_point(|&g| g <= y).clamp(1, n - 1) - 1;
    let w = ((y - xs[k]) / (xs[k + 1] - xs[k])).clamp(0.0, 1.0);
    dense[k] += weight * (1.0 - w);
    dense[k + 1] += weight * w;
}

fn clamped_gaussian_row(xs: &[f64], mu: f64, s: f64) -> (Vec<f64>, f64) {
    let n = xs.len();
    let (lo, hi) = (xs[0], xs[n - 1]);
    let mut dense = vec![0.0; n];
    if s == 0.0 {
        interpolation_weights(xs, mu.clamp(lo, hi), &mut dense, 1.0);
        return (dense, (mu - hi).max(0.0) + (lo - mu).max(0.0));
    }
    let (zl, zh) = ((lo - mu) / s, (hi - mu) / s);
    dense[0] += norm_cdf(zl);
    dense[n - 1] += 1.0 - norm_cdf(zh);
    let c_lo = xs.partition_point(|&g| g <= mu - TAIL_SDS * s).saturating_sub(1);
    let c_hi = xs.partition_point(|&g| g < mu + TAIL_SDS * s).min(n - 1);
    for c in c_lo..c_hi {
        add_cell(xs, c, mu, s, &mut dense);
    }
    let da = s * (norm_pdf(zh) - zh * (1.0 - norm_cdf(zh))) + s * (norm_pdf(zl) + zl * norm_cdf(zl));
    (dense, da)
}

/// Images of `mu` under the reflections generated by the two walls.
fn images(mu: f64, lo: f64, hi: f64, s: f64) -> Vec<f64> {
    let period = 2.0 * (hi - lo);
    let reach = ((TAIL_SDS * s) / period).ceil() as i64 + 1;
    (-reach..=reach)
        .flat_map(|k| {
            let shift = k as f64 * period;
            [mu + shift, 2.0 * lo - mu + shift]
        })
        .collect()
}

fn reflected_gaussian_row(xs: &[f64], mu: f64, s: f64) -> (Vec<f64>, f64) {
    let n = xs.len();
    let (lo, hi) = (xs[0], xs[n - 1]);
    if s == 0.0 {
        return clamped_gaussian_row(xs, mu, s);
    }
    let mut dense = vec![0.0; n];
    for centre in images(mu, lo, hi, s) {
        let c_lo = xs.partition_point(|&g| g <= centre - TAIL_SDS * s).saturating_sub(1);
        let c_hi = xs.partition_point(|&g| g < centre + TAIL_SDS * s).min(n - 1);
        for c in c_lo..c_hi {
            add_cell(xs, c, centre, s, &mut dense);
        }
    }
    let total: f64 = dense.iter().sum();
    dense.iter_mut().for_each(|w| *w /= total);
    // E[sup_{r <= dt} (W_r - d)^+] for the signed distance d from the
    // drifted start to the nearer wall.
    let d = (hi - mu).min(mu - lo);
    let da = if d >= 0.0 {
        let z = d / s;
        2.0 * s * (norm_pdf(z) - z * (1.0 - norm_cdf(z)))
    } else {
        2.0 * s * norm_pdf(0.0) - d
    };
    (dense, da)
}

#[allow(clippy::too_many_arguments)]
fn mc_row(
    domain: &Domain,
    coeffs: &CoefficientSet,
    t: f64,
    x: f64,
    dt: f64,
    n: usize,
    key: StreamKey,
    row: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut rng = key.stream(row as u64);
    let sqrt_dt = dt.sqrt();
    let mut samples = Vec::with_capacity(n);
    let mut da = 0.0;
    for _ in 0..n {
        let dw = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        let (next, delta) = euler_step(domain, coeffs, t, &[x], dt, &[dw])?;
        samples.push(next[0]);
        da += delta;
    }
    Ok((samples, da / n as f64))
}

/// Transition rows for every node at time `t`.
pub fn transition_rows(
    domain: &Domain,
    coeffs: &CoefficientSet,
    t: f64,
    xs: &[f64],
    dt: f64,
    transition: Transition,
    key: StreamKey,
) -> Result<Vec<TransitionRow>> {
    if domain.dim() != 1 || coeffs.state_dim != 1 {
        return Err(Error::InvalidArgument("grid transitions need a one-dimensional state".into()));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("space grid needs at least two nodes".into()));
    }
    let rows = xs
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let b = coeffs.b(t, &[x])[0];
            let s = coeffs.sigma(t, &[x])[0].abs() * dt.sqrt();
            let mu = x + b * dt;
            let (dense, da) = match transition {
                Transition::ExactGaussianProjected => clamped_gaussian_row(xs, mu, s),
                Transition::ReflectedGaussian => reflected_gaussian_row(xs, mu, s),
                Transition::Mc { n_paths } => {
                    if n_paths == 0 {
                        return Err(Error::InvalidArgument("Monte Carlo transition needs n_paths >= 1".into()));
                    }
                    let (samples, da) = mc_row(domain, coeffs, t, x, dt, n_paths, key, j)?;
                    let mut dense = vec![0.0; xs.len()];
                    let w = 1.0 / n_paths as f64;
                    for y in samples {
                        interpolation_weights(xs, y, &mut dense, w);
                    }
                    (dense, da)
                }
            };
            let row = TransitionRow::from_dense(dense, da.max(0.0));
            let sum = row.sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL || row.weights.iter().any(|w| *w < -ROW_SUM_TOL) {
                return Err(Error::TransitionWeights { row: j, sum });
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows)
}
