//! Discrete checks of the two variational inequalities and of the uniform
//! moment bound.

use std::fmt::Write as _;

use super::BackwardSolution;
use crate::cadlag::{stieltjes_left, BVPath, CadlagPath, Interp};
use crate::convex::{ConvexSpec, ExtReal};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::stats::{block_bootstrap_se, loglog_slope, mean};

fn node_index(sol: &BackwardSolution, s: f64) -> Result<usize> {
    let i = sol.grid.snap(s);
    if (sol.grid.time(i) - s).abs() > 1e-9 * (1.0 + sol.grid.horizon()) {
        return Err(Error::InvalidArgument(format!("time {s} is not on the solution grid")));
    }
    Ok(i)
}

fn finite_or_inf(v: ExtReal) -> f64 {
    v.finite().unwrap_or(f64::INFINITY)
}

/// Largest positive part, over probes and paths, of
/// `int <v - Y, dK> + int phi(Y) dB - int phi(v) dB` on `(s1, s2]`, where
/// `(phi, B, K)` is `(phi, t, K1)` for the first value and `(psi, A, K2)`
/// for the second.
pub fn variational_residual(
    sol: &BackwardSolution,
    phi: &ConvexSpec,
    psi: &ConvexSpec,
    probes: &[Vec<f64>],
    s1: f64,
    s2: f64,
) -> Result<(f64, f64)> {
    let (i1, i2) = (node_index(sol, s1)?, node_index(sol, s2)?);
    if i1 < sol.start || i2 < i1 {
        return Err(Error::InvalidArgument(format!("need t <= s1 <= s2, got s1={s1}, s2={s2}")));
    }
    let m = sol.m;
    let times = sol.grid.times();
    let clock = BVPath::new(CadlagPath::from_fn(times.clone(), Interp::Linear, |t| t)?);
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for j in 0..sol.n_paths {
        let mut local = vec![0.0; times.len()];
        for i in 0..times.len() - 1 {
            local[i + 1] = local[i] + sol.da_at(j, i);
        }
        let local = BVPath::new(CadlagPath::scalar(times.clone(), local.clone(), Interp::Step)?);
        let y: Vec<f64> = (0..times.len()).flat_map(|i| sol.y_at(j, i).to_vec()).collect();
        // K jumps at t_{i+1} by the increment of step i, so left limits of
        // the step path Y pick up Y_i.
        let k1 = BVPath::new(CadlagPath::new(
            times.clone(),
            (0..times.len()).flat_map(|i| sol.k1_at(j, i).to_vec()).collect(),
            m,
            Interp::Step,
        )?);
        let k2 = BVPath::new(CadlagPath::new(
            times.clone(),
            (0..times.len()).flat_map(|i| sol.k2_at(j, i).to_vec()).collect(),
            m,
            Interp::Step,
        )?);
        let phi_y: Vec<f64> = y.chunks(m).map(|v| finite_or_inf(phi.evaluate(v).unwrap_or(ExtReal::PosInf))).collect();
        // Nodes followed by no local time carry no psi mass.
        let psi_y: Vec<f64> = y
            .chunks(m)
            .enumerate()
            .map(|(i, v)| {
                if i + 1 < times.len() && sol.da_at(j, i) > 0.0 {
                    finite_or_inf(psi.evaluate(v).unwrap_or(ExtReal::PosInf))
                } else {
                    0.0
                }
            })
            .collect();
        let phi_path = CadlagPath::scalar(times.clone(), phi_y, Interp::Step)?;
        let psi_path = CadlagPath::scalar(times.clone(), psi_y, Interp::Step)?;
        let (a, b) = (times[i1], times[i2]);
        let int_phi = stieltjes_left(&phi_path, &clock, a, b);
        let int_psi = stieltjes_left(&psi_path, &local, a, b);
        let da_total = local.path().value(b)[0] - local.path().value(a)[0];
        for probe in probes {
            let diff: Vec<f64> = y.chunks(m).flat_map(|yi| probe.iter().zip(yi).map(|(p, q)| p - q)).collect();
            let diff_path = CadlagPath::new(times.clone(), diff, m, Interp::Step)?;
            if let ExtReal::Finite(pv) = phi.evaluate(probe)? {
                let lhs = stieltjes_left(&diff_path, &k1, a, b) + int_phi;
                r1 = r1.max(lhs - pv * (b - a));
            }
            if let ExtReal::Finite(pv) = psi.evaluate(probe)? {
                let lhs = stieltjes_left(&diff_path, &k2, a, b) + int_psi;
                r2 = r2.max(lhs - pv * da_total);
            }
        }
    }
    Ok((r1.max(0.0), r2.max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    pub n: usize,
    pub estimate: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub p: f64,
    pub rows: Vec<MomentRow>,
    /// `max / min` of the estimates.
    pub ratio: f64,
    /// Slope of `log estimate` against `log n`.
    pub trend: f64,
}

impl MomentTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,estimate,se,ci_lo,ci_hi\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.n, r.estimate, r.se, r.ci_lo, r.ci_hi);
        }
        out
    }
}

/// `E sup_{s >= t} |Y_s|^p` for each member of a sequence of solutions.
pub fn moment_bound_check(solutions: &[BackwardSolution], p: f64, key: StreamKey) -> Result<MomentTable> {
    if p != 2.0 && p != 4.0 {
        return Err(Error::InvalidArgument(format!("moment order must be 2 or 4, got {p}")));
    }
    let rows: Vec<MomentRow> = solutions
        .iter()
        .enumerate()
        .map(|(k, sol)| {
            let sups: Vec<f64> = (0..sol.n_paths)
                .map(|j| {
                    (sol.start..sol.n_times())
                        .map(|i| sol.y_at(j, i).iter().map(|v| v * v).sum::<f64>().sqrt().powf(p))
                        .fold(0.0, f64::max)
                })
                .collect();
            let estimate = mean(&sups);
            let se = block_bootstrap_se(&sups, 50, 200, key.child("moment", k as u64), mean);
            MomentRow { n: k + 1, estimate, se, ci_lo: estimate - 1.96 * se, ci_hi: estimate + 1.96 * se }
        })
        .collect();
    let est: Vec<f64> = rows.iter().map(|r| r.estimate).collect();
    let max = est.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = est.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = if max == 0.0 {
        1.0
    } else if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    };
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let trend = if est.iter().all(|e| *e > 0.0) && rows.len() >= 2 { loglog_slope(&ns, &est) } else { 0.0 };
    Ok(MomentTable { p, rows, ratio, trend })
}
