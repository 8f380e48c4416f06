//! Least-squares fits on a tensor Legendre basis, used for conditional
//! expectations in the regression engine and the conditional variation.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Fits whose design condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;
const CHUNK: usize = 4096;

/// Legendre polynomials of total degree `<= degree` in the coordinates
/// of the state, each coordinate mapped affinely onto `[-1, 1]`.
/// Coordinates with no spread only enter through the constant term, and in
/// one dimension the degree is capped below the number of distinct states.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyBasis {
    dim: usize,
    center: Vec<f64>,
    half_width: Vec<f64>,
    exponents: Vec<Vec<usize>>,
}

fn legendre(n: usize, x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if n >= 1 {
        out[1] = x;
    }
    for k in 1..n {
        out[k + 1] = ((2 * k + 1) as f64 * x * out[k] - k as f64 * out[k - 1]) / (k + 1) as f64;
    }
}

fn multi_indices(active: &[usize], dim: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0; dim]];
    for total in 1..=degree {
        let mut current = vec![0usize; active.len()];
        fill(active, dim, total, 0, &mut current, &mut out);
    }
    out
}

fn fill(active: &[usize], dim: usize, left: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == active.len() {
        cur[pos] = left;
        let mut e = vec![0; dim];
        for (a, &c) in active.iter().zip(cur.iter()) {
            e[*a] = c;
        }
        out.push(e);
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        fill(active, dim, left - k, pos + 1, cur, out);
    }
}

fn distinct_up_to(xs: &[f64], cap: usize) -> usize {
    let mut seen: Vec<f64> = Vec::with_capacity(cap);
    for &x in xs {
        if !seen.contains(&x) {
            seen.push(x);
            if seen.len() == cap {
                break;
            }
        }
    }
    seen.len().max(1)
}

impl PolyBasis {
    /// Basis scaled to the range of `states` (`n * dim` values, row-major).
    pub fn fitted(states: &[f64], dim: usize, degree: usize) -> Self {
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for row in states.chunks(dim) {
            for k in 0..dim {
                lo[k] = lo[k].min(row[k]);
                hi[k] = hi[k].max(row[k]);
            }
        }
        let mut center = vec![0.0; dim];
        let mut half_width = vec![0.0; dim];
        let mut active = Vec::new();
        for k in 0..dim {
            center[k] = 0.5 * (lo[k] + hi[k]);
            half_width[k] = 0.5 * (hi[k] - lo[k]);
            if half_width[k] > 1e-12 * (1.0 + center[k].abs()) {
                active.push(k);
            }
        }
        let degree = if dim == 1 { degree.min(distinct_up_to(states, degree + 1) - 1) } else { degree };
        let exponents =
            if active.is_empty() || degree == 0 { vec![vec![0; dim]] } else { multi_indices(&active, dim, degree) };
        PolyBasis { dim, center, half_width, exponents }
    }

    pub fn n_terms(&self) -> usize {
        self.exponents.len()
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let max_deg = self.exponents.iter().flatten().copied().max().unwrap_or(0);
        let mut table = vec![0.0; self.dim * (max_deg + 1)];
        for k in 0..self.dim {
            let z = if self.half_width[k] > 0.0 { (x[k] - self.center[k]) / self.half_width[k] } else { 0.0 };
            legendre(max_deg, z, &mut table[k * (max_deg + 1)..(k + 1) * (max_deg + 1)]);
        }
        for (o, e) in out.iter_mut().zip(&self.exponents) {
            *o = e.iter().enumerate().map(|(k, &p)| table[k * (max_deg + 1) + p]).product();
        }
    }
}

/// Fitted coefficients for `k` targets.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub basis: PolyBasis,
    /// `n_terms * k`, row-major by term.
    pub coef: Vec<f64>,
    pub targets: usize,
    pub condition: f64,
}

impl PolyFit {
    pub fn predict(&self, x: &[f64], out: &mut [f64]) {
        let mut phi = vec![0.0; self.basis.n_terms()];
        self.basis.eval(x, &mut phi);
        for (j, o) in out.iter_mut().enumerate().take(self.targets) {
            *o = phi.iter().enumerate().map(|(i, p)| p * self.coef[i * self.targets + j]).sum();
        }
    }
}

/// Least squares of `targets` (`n * k`) on the basis of `states` (`n * dim`).
///
/// Solved through the normal equations; Gram matrices are accumulated over
/// fixed chunks and summed in order, so the result does not depend on
/// thread scheduling.
pub fn least_squares(states: &[f64], dim: usize, targets: &[f64], k: usize, degree: usize) -> Result<PolyFit> {
    let n = states.len() / dim;
    if n == 0 || targets.len() != n * k {
        return Err(Error::DimensionMismatch { expected: n * k, got: targets.len() });
    }
    let basis = PolyBasis::fitted(states, dim, degree);
    let p = basis.n_terms();
    if n < p {
        return Err(Error::DegenerateDesign(format!("{n} samples for {p} basis functions")));
    }
    let partials: Vec<(Vec<f64>, Vec<f64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut gram = vec![0.0; p * p];
            let mut rhs = vec![0.0; p * k];
            let mut phi = vec![0.0; p];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                basis.eval(&states[i * dim..(i + 1) * dim], &mut phi);
                for a in 0..p {
                    for b in 0..=a {
                        gram[a * p + b] += phi[a] * phi[b];
                    }
                    for j in 0..k {
                        rhs[a * k + j] += phi[a] * targets[i * k + j];
                    }
                }
            }
            (gram, rhs)
        })
        .collect();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DMatrix::<f64>::zeros(p, k);
    for (g, r) in &partials {
        for a in 0..p {
            for b in 0..=a {
                gram[(a, b)] += g[a * p + b];
            }
            for j in 0..k {
                rhs[(a, j)] += r[a * k + j];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let svd = gram.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 0.0) {
        return Err(Error::DegenerateDesign("singular Gram matrix".into()));
    }
    // cond(design)^2 = cond(Gram)
    let condition = (smax / smin).sqrt();
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned { cond: condition });
    }
    let sol = svd.solve(&rhs, 0.0).map_err(|e| Error::DegenerateDesign(e.to_string()))?;
    let mut coef = vec![0.0; p * k];
    for a in 0..p {
        for j in 0..k {
            coef[a * k + j] = sol[(a, j)];
        }
    }
    Ok(PolyFit { basis, coef, targets: k, condition })
}

/// Single-target convenience wrapper returning fitted values at the samples.
pub fn fitted_values(states: &[f64], dim: usize, targets: &[f64], degree: usize) -> Result<(Vec<f64>, PolyFit)> {
    let fit = least_squares(states, dim, targets, 1, degree)?;
    let values = states
        .par_chunks(dim)
        .map(|x| {
            let mut o = [0.0];
            fit.predict(x, &mut o);
            o[0]
        })
        .collect();
    Ok((values, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_values() {
        let mut out = [0.0; 4];
        legendre(3, 0.5, &mut out);
        assert_eq!(out[0], 1.0);
        assert_eq!(out[1], 0.5);
        assert!((out[2] - (-0.125)).abs() < 1e-15);
        assert!((out[3] - (-0.4375)).abs() < 1e-15);
    }

    #[test]
    fn polynomial_recovered_exactly() {
        let xs: Vec<f64> = (0..200).map(|i| -1.0 + 2.0 * i as f64 / 199.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x + 0.5 * x * x * x).collect();
        let (fitted, fit) = fitted_values(&xs, 1, &ys, 4).unwrap();
        for (f, y) in fitted.iter().zip(&ys) {
            assert!((f - y).abs() < 1e-10);
        }
        assert!(fit.condition < 100.0);
    }

    #[test]
    fn constant_state_gives_mean() {
        let xs = vec![0.3; 50];
        let ys: Vec<f64> = (0..50).map(f64::from).collect();
        let (fitted, fit) = fitted_values(&xs, 1, &ys, 6).unwrap();
        assert_eq!(fit.basis.n_terms(), 1);
        assert!(fitted.iter().all(|v| (v - 24.5).abs() < 1e-12));
    }

    #[test]
    fn two_dimensional_basis_size() {
        let xs: Vec<f64> = (0..400).flat_map(|i| [(i % 20) as f64, (i / 20) as f64]).collect();
        let basis = PolyBasis::fitted(&xs, 2, 3);
        assert_eq!(basis.n_terms(), 10);
    }
}
