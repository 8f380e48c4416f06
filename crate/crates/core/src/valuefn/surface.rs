use std::fmt::Write as _;

use crate::error::{Error, Result};

/// `u(t_i, x_j)` in R^m on a tensor grid, with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSurface {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub m: usize,
    /// `times.len() * xs.len() * m`, time-major.
    pub u: Vec<f64>,
    pub se: Vec<f64>,
}

fn locate(grid: &[f64], v: f64) -> (usize, f64) {
    if grid.len() == 1 {
        return (0, 0.0);
    }
    let k = grid.partition_point(|&g| g <= v).clamp(1, grid.len() - 1) - 1;
    let w = ((v - grid[k]) / (grid[k + 1] - grid[k])).clamp(0.0, 1.0);
    (k, w)
}

impl ValueSurface {
    pub fn zeros(times: Vec<f64>, xs: Vec<f64>, m: usize) -> Self {
        let n = times.len() * xs.len() * m;
        ValueSurface { times, xs, m, u: vec![0.0; n], se: vec![0.0; n] }
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        (i * self.xs.len() + j) * self.m
    }

    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.u[o..o + self.m]
    }

    pub fn se_at(&self, i: usize, j: usize) -> &[f64] {
        let o = self.offset(i, j);
        &self.se[o..o + self.m]
    }

    pub fn set(&mut self, i: usize, j: usize, value: &[f64]) {
        let o = self.offset(i, j);
        self.u[o..o + self.m].copy_from_slice(value);
    }

    /// Values `u(t_i, .)` on the whole space grid.
    pub fn row(&self, i: usize) -> &[f64] {
        let o = self.offset(i, 0);
        &self.u[o..o + self.xs.len() * self.m]
    }

    pub fn set_row(&mut self, i: usize, values: &[f64]) {
        let o = self.offset(i, 0);
        self.u[o..o + self.xs.len() * self.m].copy_from_slice(values);
    }

    /// Piecewise-linear in `x` on time row `i`.
    pub fn interpolate_row(&self, i: usize, x: f64) -> Vec<f64> {
        let (k, w) = locate(&self.xs, x);
        let a = self.at(i, k);
        if w == 0.0 {
            return a.to_vec();
        }
        let b = self.at(i, k + 1);
        a.iter().zip(b).map(|(p, q)| p + w * (q - p)).collect()
    }

    /// Bilinear interpolation; arguments outside the grid are clamped.
    pub fn value_at(&self, t: f64, x: f64) -> Vec<f64> {
        let (i, w) = locate(&self.times, t);
        let a = self.interpolate_row(i, x);
        if w == 0.0 {
            return a;
        }
        let b = self.interpolate_row(i + 1, x);
        a.iter().zip(&b).map(|(p, q)| p + w * (q - p)).collect()
    }

    /// Index of the time node equal to `t` up to `1e-9` relative.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * (1.0 + self.times.last().copied().unwrap_or(0.0).abs());
        self.times
            .iter()
            .position(|s| (s - t).abs() <= tol)
            .ok_or_else(|| Error::InvalidArgument(format!("time {t} is not a node of the surface")))
    }

    /// `max |self - other|` over the nodes of `self`, `other` interpolated.
    pub fn sup_gap(&self, other: &ValueSurface) -> f64 {
        let mut worst = 0.0f64;
        for (i, &t) in self.times.iter().enumerate() {
            for (j, &x) in self.xs.iter().enumerate() {
                let o = other.value_at(t, x);
                for (a, b) in self.at(i, j).iter().zip(&o) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite())
    }

    /// `t,x,u,se` rows; with `m > 1` the value columns are `u0..`, `se0..`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x");
        if self.m == 1 {
            out.push_str(",u,se");
        } else {
            for k in 0..self.m {
                let _ = write!(out, ",u{k}");
            }
            for k in 0..self.m {
                let _ = write!(out, ",se{k}");
            }
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            for (j, x) in self.xs.iter().enumerate() {
                let _ = write!(out, "{t},{x}");
                for v in self.at(i, j).iter().chain(self.se_at(i, j)) {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
        out
    }
}
