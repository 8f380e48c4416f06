//! Lebesgue–Stieltjes integrals of grid paths, evaluated exactly on the
//! merged grid of integrand and integrator.
//!
//! All integrals run over `(s, t]`: a jump of `k` at `s` is excluded, a
//! jump at `t` is included.
//!
//! # Panics
//!
//! The integrand and integrator must have the same dimension.

use super::{BVPath, CadlagPath, Interp, Partition};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `s`, every grid time of either path strictly inside `(s, t)`, and `t`.
fn merged_nodes(x: &CadlagPath, k: &CadlagPath, s: f64, t: f64) -> Vec<f64> {
    let mut nodes: Vec<f64> = x.times().iter().chain(k.times()).copied().filter(|&r| r > s && r < t).collect();
    nodes.push(s);
    nodes.push(t);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

fn stieltjes(x: &CadlagPath, k: &BVPath, s: f64, t: f64, side: Side) -> f64 {
    let k = k.path();
    assert_eq!(x.dim(), k.dim(), "integrand and integrator dimensions differ");
    if t <= s {
        return 0.0;
    }
    let nodes = merged_nodes(x, k, s, t);
    let mut acc = 0.0;
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        if k.interp() == Interp::Linear {
            let dk: Vec<f64> = k.value(b).iter().zip(k.value(a)).map(|(p, q)| p - q).collect();
            let xa = x.value(a);
            let xm: Vec<f64> = match x.interp() {
                Interp::Step => xa,
                Interp::Linear => xa.iter().zip(x.value(b)).map(|(p, q)| 0.5 * (p + q)).collect(),
            };
            acc += dot(&xm, &dk);
        }
        let jump = k.jump(b);
        if jump.iter().any(|v| *v != 0.0) {
            let xb = match side {
                Side::Left => x.left_limit(b),
                Side::Right => x.value(b),
            };
            acc += dot(&xb, &jump);
        }
    }
    acc
}

/// `int_(s,t] <x_{r-}, dk_r>`.
pub fn stieltjes_left(x: &CadlagPath, k: &BVPath, s: f64, t: f64) -> f64 {
    stieltjes(x, k, s, t, Side::Left)
}

/// `int_(s,t] <x_r, dk_r>`.
pub fn stieltjes_right(x: &CadlagPath, k: &BVPath, s: f64, t: f64) -> f64 {
    stieltjes(x, k, s, t, Side::Right)
}

/// `sum_{s < r <= t} <dx_r, dk_r>` over common jump times.
pub fn jump_covariation_between(x: &CadlagPath, k: &CadlagPath, s: f64, t: f64) -> f64 {
    if x.interp() == Interp::Linear || k.interp() == Interp::Linear || t <= s {
        return 0.0;
    }
    merged_nodes(x, k, s, t).into_iter().filter(|&r| r > s).map(|r| dot(&x.jump(r), &k.jump(r))).sum()
}

/// `[x, k]_t = sum_{0 <= r <= t} <dx_r, dk_r>`.
pub fn jump_covariation(x: &CadlagPath, k: &CadlagPath, t: f64) -> f64 {
    jump_covariation_between(x, k, 0.0, t)
}

/// `V_pi(k) = sum |k_{t_{i+1}} - k_{t_i}|`.
pub fn total_variation(k: &BVPath, pi: &Partition) -> f64 {
    let k = k.path();
    pi.points()
        .windows(2)
        .map(|w| {
            let d: Vec<f64> = k.value(w[1]).iter().zip(k.value(w[0])).map(|(a, b)| a - b).collect();
            norm(&d)
        })
        .sum()
}

/// `V` over the dyadic partitions of levels `1..=depth`.
pub fn refinement_sequence(k: &BVPath, depth: u32) -> Vec<f64> {
    let horizon = k.path().horizon();
    (1..=depth).map(|level| total_variation(k, &Partition::dyadic(horizon, level).expect("positive horizon"))).collect()
}

/// Integration by parts on `[0, t]`:
/// `| int l dk + int k dl - <l_t, k_t> + <l_0, k_0> - [l, k]_t |`,
/// with `int k dl` formed as the left integral plus the jump covariation.
pub fn ibp_residual(l: &BVPath, k: &BVPath, t: f64) -> f64 {
    let (lp, kp) = (l.path(), k.path());
    let lhs = stieltjes_right(lp, k, 0.0, t) + stieltjes_left(kp, l, 0.0, t) + jump_covariation(kp, lp, t);
    let rhs = dot(&lp.value(t), &kp.value(t)) - dot(lp.node(0), kp.node(0)) + jump_covariation(lp, kp, t);
    (lhs - rhs).abs()
}

/// `| int_s^t <x^n, dk^n> - int_s^t <x, dk> |` for each `n`.
pub fn helly_bray_gap(x_seq: &[CadlagPath], k_seq: &[BVPath], x: &CadlagPath, k: &BVPath, s: f64, t: f64) -> Vec<f64> {
    let limit = stieltjes_right(x, k, s, t);
    x_seq.iter().zip(k_seq).map(|(xn, kn)| (stieltjes_right(xn, kn, s, t) - limit).abs()).collect()
}
