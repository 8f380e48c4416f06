//! Conditional variation and the S-tightness diagnostic for ensembles of
//! scalar paths sampled on a shared grid.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::Partition;
use crate::error::{Error, Result};
use crate::regress;
use crate::stats::{loglog_slope, mean, pairwise_sum};

pub const MIN_ENSEMBLE: usize = 100;
pub const DEFAULT_BINS: usize = 32;
/// Ratio `max / min` of diagnostic totals still counted as bounded.
pub const BOUNDED_RATIO: f64 = 3.0;

/// Scalar paths `paths[j][i]` at `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub times: Vec<f64>,
    pub paths: Vec<Vec<f64>>,
}

impl PathEnsemble {
    pub fn new(times: Vec<f64>, paths: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(bad) = paths.iter().find(|p| p.len() != times.len()) {
            return Err(Error::DimensionMismatch { expected: times.len(), got: bad.len() });
        }
        Ok(PathEnsemble { times, paths })
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// `E sup_t |L_t|`.
    pub fn expected_sup(&self) -> f64 {
        let sups: Vec<f64> = self.paths.iter().map(|p| p.iter().fold(0.0f64, |m, v| m.max(v.abs()))).collect();
        mean(&sups)
    }

    /// Copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        PathEnsemble {
            times: self.times.clone(),
            paths: self.paths.iter().map(|p| p.iter().map(|v| v * factor).collect()).collect(),
        }
    }

    fn index_of(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * (1.0 + self.times.last().copied().unwrap_or(0.0).abs());
        let i = self.times.partition_point(|&s| s < t - tol);
        if i < self.times.len() && (self.times[i] - t).abs() <= tol {
            Ok(i)
        } else {
            Err(Error::InvalidArgument(format!("partition point {t} is not on the ensemble grid")))
        }
    }
}

/// Estimator of `E[dL | state]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regressor {
    /// Equal-mass bins on the state; equal states never straddle two bins.
    Bucket {
        bins: usize,
    },
    Polynomial {
        degree: usize,
    },
}

impl Default for Regressor {
    fn default() -> Self {
        Regressor::Bucket { bins: DEFAULT_BINS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvEstimate {
    pub value: f64,
    /// Expected size of the fitted conditional means when the true ones
    /// vanish; the estimate of a martingale sits below a few multiples.
    pub noise: f64,
}

/// Returns fitted conditional means per sample and the noise level.
fn bucket_fit(state: &[f64], target: &[f64], bins: usize) -> (Vec<f64>, f64) {
    let n = state.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| state[a].total_cmp(&state[b]).then(a.cmp(&b)));
    let bins = bins.clamp(1, n);
    let mut fitted = vec![0.0; n];
    let mut noise = 0.0;
    let mut start = 0;
    for b in 1..=bins {
        if start >= n {
            break;
        }
        let mut end = if b == bins { n } else { (b * n / bins).max(start + 1) };
        while end < n && state[order[end]] == state[order[end - 1]] {
            end += 1;
        }
        let members = &order[start..end];
        let vals: Vec<f64> = members.iter().map(|&j| target[j]).collect();
        let m = mean(&vals);
        let count = vals.len() as f64;
        if vals.len() > 1 {
            let var = pairwise_sum(&vals.iter().map(|v| (v - m) * (v - m)).collect::<Vec<_>>()) / (count - 1.0);
            noise += (count / n as f64) * (var / count).sqrt();
        }
        for &j in members {
            fitted[j] = m;
        }
        start = end;
    }
    (fitted, noise)
}

fn poly_fit(state: &[f64], target: &[f64], degree: usize) -> Result<(Vec<f64>, f64)> {
    let (fitted, fit) = regress::fitted_values(state, 1, target, degree)?;
    let n = state.len() as f64;
    let resid: Vec<f64> = target.iter().zip(&fitted).map(|(y, f)| (y - f) * (y - f)).collect();
    let p = fit.basis.n_terms() as f64;
    let sigma = (pairwise_sum(&resid) / (n - p).max(1.0)).sqrt();
    Ok((fitted, sigma * (p / n).sqrt()))
}

/// `sum_i E|E[L_{t_{i+1}} - L_{t_i} | state_{t_i}]|` over the partition,
/// a lower bound for the conditional variation.
pub fn conditional_variation(
    ensemble: &PathEnsemble,
    state: &PathEnsemble,
    pi: &Partition,
    regressor: Regressor,
) -> Result<CvEstimate> {
    if ensemble.len() < MIN_ENSEMBLE {
        return Err(Error::EnsembleTooSmall { got: ensemble.len(), min: MIN_ENSEMBLE });
    }
    if state.len() != ensemble.len() || state.times.len() != ensemble.times.len() {
        return Err(Error::DimensionMismatch { expected: ensemble.len(), got: state.len() });
    }
    let idx: Vec<usize> = pi.points().iter().map(|&t| ensemble.index_of(t)).collect::<Result<_>>()?;
    let parts: Vec<(f64, f64)> = idx
        .par_windows(2)
        .map(|w| -> Result<(f64, f64)> {
            let (i0, i1) = (w[0], w[1]);
            let dl: Vec<f64> = ensemble.paths.iter().map(|p| p[i1] - p[i0]).collect();
            let s: Vec<f64> = state.paths.iter().map(|p| p[i0]).collect();
            let (fitted, noise) = match regressor {
                Regressor::Bucket { bins } => bucket_fit(&s, &dl, bins),
                Regressor::Polynomial { degree } => poly_fit(&s, &dl, degree)?,
            };
            let abs: Vec<f64> = fitted.iter().map(|v| v.abs()).collect();
            Ok((mean(&abs), noise))
        })
        .collect::<Result<_>>()?;
    let (values, noises): (Vec<f64>, Vec<f64>) = parts.into_iter().unzip();
    Ok(CvEstimate { value: pairwise_sum(&values), noise: pairwise_sum(&noises) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessRow {
    pub n: usize,
    pub cv: f64,
    pub noise: f64,
    pub esup: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TightnessReport {
    pub rows: Vec<TightnessRow>,
    pub max_total: f64,
    pub min_total: f64,
    /// `max_total / min_total`.
    pub ratio: f64,
    /// Slope of `log total` against `log n`; near zero for a bounded family.
    pub trend: f64,
}

impl TightnessReport {
    fn from_rows(rows: Vec<TightnessRow>) -> Self {
        let totals: Vec<f64> = rows.iter().map(|r| r.total).collect();
        let max_total = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_total = totals.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = if max_total == 0.0 {
            1.0
        } else if min_total > 0.0 {
            max_total / min_total
        } else {
            f64::INFINITY
        };
        let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let trend = if totals.iter().all(|t| *t > 0.0) { loglog_slope(&ns, &totals) } else { 0.0 };
        TightnessReport { rows, max_total, min_total, ratio, trend }
    }

    pub fn bounded(&self) -> bool {
        self.ratio <= BOUNDED_RATIO
    }

    /// `n,cv,esup,total` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,cv,esup,total\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.n, r.cv, r.esup, r.total);
        }
        out
    }
}

/// Per-member `CV_T + E sup|L|`. Member `n` (1-based) is `members[n - 1]`,
/// given as `(paths, conditioning state)`.
pub fn s_tightness_diagnostic(
    members: &[(PathEnsemble, PathEnsemble)],
    pi: &Partition,
    regressor: Regressor,
) -> Result<TightnessReport> {
    if members.len() < 2 {
        return Err(Error::InvalidArgument("tightness diagnostic needs at least two ensembles".into()));
    }
    let rows = members
        .iter()
        .enumerate()
        .map(|(k, (paths, state))| {
            let cv = conditional_variation(paths, state, pi, regressor)?;
            let esup = paths.expected_sup();
            Ok(TightnessRow { n: k + 1, cv: cv.value, noise: cv.noise, esup, total: cv.value + esup })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TightnessReport::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn walks(n_paths: usize, n_steps: usize, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>) {
        let times: Vec<f64> = (0..=n_steps).map(|i| i as f64).collect();
        let paths = (0..n_paths)
            .map(|j| {
                let mut rng = stream(seed, "walk", j as u64);
                let mut s = 0.0;
                let mut p = vec![0.0];
                for _ in 0..n_steps {
                    s += if rng.random::<bool>() { 1.0 } else { -1.0 };
                    p.push(s);
                }
                p
            })
            .collect();
        (times, paths)
    }

    #[test]
    fn deterministic_path_gives_horizon() {
        let times: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let paths = vec![times.clone(); 150];
        let ens = PathEnsemble::new(times.clone(), paths).unwrap();
        let pi = Partition::new(times).unwrap();
        let cv = conditional_variation(&ens, &ens, &pi, Regressor::default()).unwrap();
        assert!((cv.value - 1.0).abs() < 1e-12);
        assert!(cv.noise < 1e-12);
    }

    #[test]
    fn martingale_is_within_noise() {
        let (times, paths) = walks(4000, 50, 5);
        let ens = PathEnsemble::new(times.clone(), paths).unwrap();
        let pi = Partition::new(times).unwrap();
        for reg in [Regressor::default(), Regressor::Polynomial { degree: 3 }] {
            let cv = conditional_variation(&ens, &ens, &pi, reg).unwrap();
            assert!(cv.value <= 3.0 * cv.noise, "{reg:?}: {cv:?}");
        }
    }

    #[test]
    fn small_ensemble_rejected() {
        let (times, paths) = walks(50, 5, 1);
        let ens = PathEnsemble::new(times.clone(), paths).unwrap();
        let pi = Partition::new(times).unwrap();
        assert!(matches!(
            conditional_variation(&ens, &ens, &pi, Regressor::default()),
            Err(Error::EnsembleTooSmall { .. })
        ));
    }

    #[test]
    fn constant_paths_are_bounded() {
        let times: Vec<f64> = (0..=10).map(f64::from).collect();
        let ens = PathEnsemble::new(times.clone(), vec![vec![-2.0; 11]; 120]).unwrap();
        let pi = Partition::new(times).unwrap();
        let report =
            s_tightness_diagnostic(&[(ens.clone(), ens.clone()), (ens.clone(), ens)], &pi, Regressor::default())
                .unwrap();
        assert!(report.bounded());
        for r in &report.rows {
            assert_eq!(r.cv, 0.0);
            assert_eq!(r.esup, 2.0);
        }
    }

    #[test]
    fn growing_family_is_flagged() {
        let (times, paths) = walks(500, 20, 2);
        let ens = PathEnsemble::new(times.clone(), paths).unwrap();
        let pi = Partition::new(times).unwrap();
        let members: Vec<_> = (1..=6).map(|n| (ens.scaled(n as f64), ens.clone())).collect();
        let report = s_tightness_diagnostic(&members, &pi, Regressor::default()).unwrap();
        assert!(!report.bounded());
        assert!((report.trend - 1.0).abs() < 0.05, "{}", report.trend);
    }
}
