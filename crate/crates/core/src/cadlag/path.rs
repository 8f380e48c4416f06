use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Right-continuous, piecewise constant; jumps sit at grid times.
    Step,
    /// Continuous, piecewise linear.
    Linear,
}

/// A path on a finite grid `0 = t_0 < ... < t_n = T` with values in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
    interp: Interp,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl CadlagPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, dim: usize, interp: Interp) -> Result<Self> {
        if dim == 0 || times.is_empty() {
            return Err(Error::InvalidArgument("empty path".into()));
        }
        if values.len() != times.len() * dim {
            return Err(Error::DimensionMismatch { expected: times.len() * dim, got: values.len() });
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidArgument(format!("path must start at time 0, got {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("path times must be finite and strictly increasing".into()));
        }
        Ok(CadlagPath { times, values, dim, interp })
    }

    pub fn scalar(times: Vec<f64>, values: Vec<f64>, interp: Interp) -> Result<Self> {
        CadlagPath::new(times, values, 1, interp)
    }

    /// Samples `f` at the grid times.
    pub fn from_fn(times: Vec<f64>, interp: Interp, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = times.iter().map(|&t| f(t)).collect();
        CadlagPath::scalar(times, values, interp)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Index of the cell `[t_i, t_{i+1})` containing `t`, clamped to the grid.
    fn cell(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// `x_t`, right-continuous. Times past `T` read the terminal value.
    pub fn value(&self, t: f64) -> Vec<f64> {
        let i = self.cell(t);
        match self.interp {
            Interp::Step => self.node(i).to_vec(),
            Interp::Linear => {
                if i + 1 >= self.len() || t <= self.times[i] {
                    return self.node(i).to_vec();
                }
                let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
                self.node(i).iter().zip(self.node(i + 1)).map(|(a, b)| a + w * (b - a)).collect()
            }
        }
    }

    /// `x_{t-}`, with `x_{0-} = x_0`.
    pub fn left_limit(&self, t: f64) -> Vec<f64> {
        match self.interp {
            Interp::Linear => self.value(t),
            Interp::Step => {
                let i = self.cell(t);
                if i > 0 && self.times[i] == t {
                    self.node(i - 1).to_vec()
                } else {
                    self.node(i).to_vec()
                }
            }
        }
    }

    /// `x_t - x_{t-}`.
    pub fn jump(&self, t: f64) -> Vec<f64> {
        self.value(t).iter().zip(self.left_limit(t)).map(|(a, b)| a - b).collect()
    }

    /// `sup_t |x_t|`; attained at a node for both interpolations.
    pub fn sup_norm(&self) -> f64 {
        self.values.chunks(self.dim).map(|v| dot(v, v).sqrt()).fold(0.0, f64::max)
    }

    /// Applies `f(t, x)` node by node.
    pub fn map(&self, out_dim: usize, f: impl Fn(f64, &[f64], &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; self.len() * out_dim];
        for (i, &t) in self.times.iter().enumerate() {
            f(t, self.node(i), &mut values[i * out_dim..(i + 1) * out_dim]);
        }
        CadlagPath::new(self.times.clone(), values, out_dim, self.interp)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for k in 0..self.dim {
            let _ = write!(out, ",v{k}");
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{t}");
            for v in self.node(i) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, interp: Interp) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidArgument("empty CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"time") || cols.len() < 2 {
            return Err(Error::InvalidArgument(format!("bad path CSV header '{header}'")));
        }
        let dim = cols.len() - 1;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim + 1 {
                return Err(Error::InvalidArgument(format!("row {row}: expected {} fields", dim + 1)));
            }
            let parse =
                |s: &str| s.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("row {row}: '{s}': {e}")));
            times.push(parse(fields[0])?);
            for f in &fields[1..] {
                values.push(parse(f)?);
            }
        }
        CadlagPath::new(times, values, dim, interp)
    }
}

/// A path of bounded variation with its cell increments cached.
#[derive(Debug, Clone, PartialEq)]
pub struct BVPath {
    path: CadlagPath,
    increments: Vec<f64>,
}

impl BVPath {
    pub fn new(path: CadlagPath) -> Self {
        let d = path.dim();
        let increments = (0..path.len().saturating_sub(1))
            .flat_map(|i| {
                let (a, b) = (path.node(i), path.node(i + 1));
                (0..d).map(move |k| b[k] - a[k])
            })
            .collect();
        BVPath { path, increments }
    }

    pub fn path(&self) -> &CadlagPath {
        &self.path
    }

    /// Increment over cell `i`, `k_{t_{i+1}} - k_{t_i}`.
    pub fn increment(&self, i: usize) -> &[f64] {
        let d = self.path.dim();
        &self.increments[i * d..(i + 1) * d]
    }

    /// `|k|_T` on the native grid, exact for both interpolations.
    pub fn total_variation(&self) -> f64 {
        self.increments.chunks(self.path.dim()).map(|v| dot(v, v).sqrt()).sum()
    }

    /// Running variation `|k|_t` at each grid node.
    pub fn running_variation(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for v in self.increments.chunks(self.path.dim()) {
            acc += dot(v, v).sqrt();
            out.push(acc);
        }
        out
    }
}

impl From<CadlagPath> for BVPath {
    fn from(path: CadlagPath) -> Self {
        BVPath::new(path)
    }
}

/// Sorted points `0 = t_0 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    points: Vec<f64>,
}

impl Partition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("partition needs at least two points".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("partition points must be strictly increasing".into()));
        }
        Ok(Partition { points })
    }

    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        let n = n.max(1);
        Partition::new((0..=n).map(|i| if i == n { horizon } else { horizon * i as f64 / n as f64 }).collect())
    }

    /// `{ j T / 2^level }`.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        Partition::uniform(horizon, 1usize << level)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn mesh(&self) -> f64 {
        self.points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step() -> CadlagPath {
        CadlagPath::scalar(vec![0.0, 0.5, 1.0], vec![1.0, 3.0, 2.0], Interp::Step).unwrap()
    }

    #[test]
    fn step_values_are_right_continuous() {
        let p = step();
        assert_eq!(p.value(0.5), vec![3.0]);
        assert_eq!(p.left_limit(0.5), vec![1.0]);
        assert_eq!(p.value(0.7), vec![3.0]);
        assert_eq!(p.left_limit(0.0), vec![1.0]);
        assert_eq!(p.jump(0.5), vec![2.0]);
        assert_eq!(p.jump(0.6), vec![0.0]);
    }

    #[test]
    fn linear_values_interpolate() {
        let p = CadlagPath::scalar(vec![0.0, 1.0], vec![0.0, 2.0], Interp::Linear).unwrap();
        assert_eq!(p.value(0.25), vec![0.5]);
        assert_eq!(p.jump(0.25), vec![0.0]);
    }

    #[test]
    fn csv_round_trip() {
        let p = CadlagPath::new(vec![0.0, 0.1, 1.0], vec![1.0, -2.0, 0.5, 1e-300, 3.25, 7.0], 2, Interp::Step).unwrap();
        let text = p.to_csv();
        assert!(text.starts_with("time,v0,v1\n"));
        assert_eq!(CadlagPath::from_csv(&text, Interp::Step).unwrap(), p);
    }

    #[test]
    fn invalid_paths_rejected() {
        assert!(CadlagPath::scalar(vec![0.0, 0.0], vec![1.0, 1.0], Interp::Step).is_err());
        assert!(CadlagPath::scalar(vec![0.1, 1.0], vec![1.0, 1.0], Interp::Step).is_err());
        assert!(CadlagPath::scalar(vec![0.0, 1.0], vec![1.0], Interp::Step).is_err());
        assert!(Partition::new(vec![0.0]).is_err());
    }

    #[test]
    fn partition_mesh() {
        let p = Partition::new(vec![0.0, 0.1, 0.5, 1.0]).unwrap();
        assert_eq!(p.mesh(), 0.5);
        assert_eq!(Partition::dyadic(1.0, 3).unwrap().points().len(), 9);
    }
}
