use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ValueSurface;
use crate::backward::{solve_grid, solve_regression, BackwardSolution, SolverParams, Transition};
use crate::cadlag::{s_tightness_diagnostic, Partition, PathEnsemble, Regressor, TightnessReport, BOUNDED_RATIO};
use crate::error::{Error, Result};
use crate::forward::{simulate_ensemble_with, Reflection, TimeGrid, BOUNDARY_TOL};
use crate::presets::Problem;
use crate::rng::StreamKey;
use crate::stats::{fit_line, loglog_slope, mean, std_error, Estimate};

/// Which backward solver evaluates `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum Engine {
    Grid {
        n_t: usize,
        n_x: usize,
        transition: Transition,
    },
    Regression {
        n_t: usize,
        n_paths: usize,
        #[serde(default = "symmetrized")]
        reflection: Reflection,
    },
}

fn symmetrized() -> Reflection {
    Reflection::Symmetrized
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub engine: Engine,
    pub params: SolverParams,
    pub seed: u64,
}

impl EngineConfig {
    pub fn grid(n_t: usize, n_x: usize, seed: u64) -> Self {
        EngineConfig {
            engine: Engine::Grid { n_t, n_x, transition: Transition::ReflectedGaussian },
            params: SolverParams::default(),
            seed,
        }
    }

    pub fn regression(n_t: usize, n_paths: usize, seed: u64) -> Self {
        EngineConfig {
            engine: Engine::Regression { n_t, n_paths, reflection: Reflection::Symmetrized },
            params: SolverParams::default(),
            seed,
        }
    }

    pub fn n_t(&self) -> usize {
        match self.engine {
            Engine::Grid { n_t, .. } | Engine::Regression { n_t, .. } => n_t,
        }
    }

    fn key(&self) -> StreamKey {
        StreamKey::new(self.seed, "valuefn")
    }
}

fn check_point(problem: &Problem, t: f64, x: f64) -> Result<()> {
    if problem.coeffs.state_dim != 1 {
        return Err(Error::InvalidArgument("value-function experiments use a one-dimensional state".into()));
    }
    let horizon = problem.coeffs.horizon;
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, {horizon}]")));
    }
    if !problem.domain.contains_closure(&[x], BOUNDARY_TOL) {
        return Err(Error::InvalidArgument(format!("x = {x} outside the closed domain")));
    }
    Ok(())
}

/// Grid-engine surface on `[0, T] x D`.
pub fn value_surface(problem: &Problem, cfg: &EngineConfig) -> Result<ValueSurface> {
    let Engine::Grid { n_t, n_x, transition } = cfg.engine else {
        return Err(Error::InvalidArgument("value surfaces come from the grid engine".into()));
    };
    let grid = TimeGrid::new(problem.coeffs.horizon, n_t)?;
    let sol = solve_grid(
        &problem.domain,
        &problem.coeffs,
        &problem.phi,
        &problem.psi,
        grid,
        n_x,
        transition,
        &cfg.params,
        cfg.key().child("grid", 0),
    )?;
    Ok(sol.surface)
}

/// Regression-engine solution for paths started at `(t, x)`.
pub fn regression_paths(
    problem: &Problem,
    t: f64,
    x: f64,
    cfg: &EngineConfig,
    key: StreamKey,
) -> Result<BackwardSolution> {
    let Engine::Regression { n_t, n_paths, reflection } = cfg.engine else {
        return Err(Error::InvalidArgument("path solutions come from the regression engine".into()));
    };
    check_point(problem, t, x)?;
    let grid = TimeGrid::new(problem.coeffs.horizon, n_t)?;
    let ens = simulate_ensemble_with(&problem.domain, &problem.coeffs, grid, t, &[x], n_paths, reflection, key)?;
    solve_regression(&ens, &problem.coeffs, &problem.phi, &problem.psi, &cfg.params)
}

/// `u` at several points, component 0. The grid engine solves once and reads
/// the surface; the regression engine runs point `k` on its own stream.
pub fn evaluate_points(problem: &Problem, points: &[(f64, f64)], cfg: &EngineConfig) -> Result<Vec<Estimate>> {
    for &(t, x) in points {
        check_point(problem, t, x)?;
    }
    let horizon = problem.coeffs.horizon;
    let terminal = |x: f64| Estimate { value: problem.coeffs.h(&[x])[0], se: 0.0 };
    match cfg.engine {
        Engine::Grid { .. } => {
            let surface = value_surface(problem, cfg)?;
            Ok(points
                .iter()
                .map(
                    |&(t, x)| {
                        if t == horizon {
                            terminal(x)
                        } else {
                            Estimate { value: surface.value_at(t, x)[0], se: 0.0 }
                        }
                    },
                )
                .collect())
        }
        Engine::Regression { .. } => points
            .par_iter()
            .enumerate()
            .map(|(k, &(t, x))| {
                if t == horizon {
                    return Ok(terminal(x));
                }
                let key = cfg.key().child("point", k as u64);
                let sol = regression_paths(problem, t, x, cfg, key)?;
                Ok(sol.y0(key.child("se", 0))[0])
            })
            .collect(),
    }
}

/// `u(t, x)` with its standard error.
pub fn evaluate_u(problem: &Problem, t: f64, x: f64, cfg: &EngineConfig) -> Result<Estimate> {
    Ok(evaluate_points(problem, &[(t, x)], cfg)?[0])
}

/// `limit + 2^{-n} direction` for `n = 1..=n_max`.
pub fn geometric_sequence(limit: (f64, f64), direction: (f64, f64), n_max: usize) -> Vec<(f64, f64)> {
    (1..=n_max)
        .map(|n| {
            let r = 0.5f64.powi(n as i32);
            (limit.0 + r * direction.0, limit.1 + r * direction.1)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusRow {
    pub n: usize,
    pub dt: f64,
    pub dx: f64,
    pub value: f64,
    pub gap: f64,
    /// `SE_n + SE_limit`.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusTable {
    pub limit: Estimate,
    pub rows: Vec<ModulusRow>,
    /// Log-log slope of the gap against `|x_n - x|`.
    pub exponent_x: Option<f64>,
    /// Log-log slope of the gap against `|t_n - t|^{1/2}`.
    pub exponent_t: Option<f64>,
}

impl ModulusTable {
    /// Whether the last gap is below `k (SE_n + SE_limit) + tol`.
    pub fn converged(&self, k: f64, tol: f64) -> bool {
        self.rows.last().is_some_and(|r| r.gap <= k * r.se + tol)
    }

    /// Each gap is at most the previous one plus `k` combined SEs and `slack`.
    pub fn monotone(&self, k: f64, slack: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].gap <= w[0].gap + k * (w[0].se + w[1].se) + slack)
    }

    /// Slope of `log gap` against `n` over the nonzero gaps.
    pub fn trend(&self) -> f64 {
        let (ns, lg): (Vec<f64>, Vec<f64>) =
            self.rows.iter().filter(|r| r.gap > 0.0).map(|r| (r.n as f64, r.gap.ln())).unzip();
        if ns.len() < 2 {
            return 0.0;
        }
        fit_line(&ns, &lg).slope
    }

    /// `n,dt,dx,gap,se` rows and a closing `fitted_exponent,<t>,<x>,,` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,dt,dx,gap,se\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.n, r.dt, r.dx, r.gap, r.se);
        }
        let fmt = |e: Option<f64>| e.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "fitted_exponent,{},{},,", fmt(self.exponent_t), fmt(self.exponent_x));
        out
    }
}

fn exponent(rows: &[ModulusRow], scale: impl Fn(&ModulusRow) -> f64) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().map(|r| (scale(r), r.gap)).filter(|(s, g)| *s > 0.0 && *g > 0.0).unzip();
    let distinct = xs.windows(2).any(|w| w[0] != w[1]);
    (xs.len() >= 2 && distinct).then(|| loglog_slope(&xs, &ys))
}

/// Gaps `|u(t_n, x_n) - u(t, x)|` along `sequence`.
pub fn continuity_modulus(
    problem: &Problem,
    limit: (f64, f64),
    sequence: &[(f64, f64)],
    cfg: &EngineConfig,
) -> Result<ModulusTable> {
    if sequence.is_empty() {
        return Err(Error::InvalidArgument("continuity modulus needs a non-empty sequence".into()));
    }
    let mut points = vec![limit];
    points.extend_from_slice(sequence);
    let est = evaluate_points(problem, &points, cfg)?;
    let lim = est[0];
    let rows: Vec<ModulusRow> = sequence
        .iter()
        .zip(&est[1..])
        .enumerate()
        .map(|(k, (&(t, x), e))| ModulusRow {
            n: k + 1,
            dt: (t - limit.0).abs(),
            dx: (x - limit.1).abs(),
            value: e.value,
            gap: (e.value - lim.value).abs(),
            se: e.se + lim.se,
        })
        .collect();
    let exponent_x = exponent(&rows, |r| r.dx);
    let exponent_t = exponent(&rows, |r| r.dt.sqrt());
    Ok(ModulusTable { limit: lim, rows, exponent_x, exponent_t })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovRow {
    pub s: f64,
    /// `E |Y_s - u(s, X_s)|`.
    pub residual: f64,
    pub se: f64,
}

/// Compares regression-engine `Y_s` along paths from `(t, x)` with the
/// grid-engine surface evaluated at `X_s`.
pub fn markov_consistency(
    problem: &Problem,
    grid_cfg: &EngineConfig,
    regression_cfg: &EngineConfig,
    t: f64,
    x: f64,
    checkpoints: &[f64],
) -> Result<Vec<MarkovRow>> {
    let surface = value_surface(problem, grid_cfg)?;
    let sol = regression_paths(problem, t, x, regression_cfg, regression_cfg.key().child("markov", 0))?;
    let tol = 1e-9 * (1.0 + problem.coeffs.horizon);
    checkpoints
        .iter()
        .map(|&s| {
            let i = sol.grid.snap(s);
            if (sol.grid.time(i) - s).abs() > tol || i < sol.start {
                return Err(Error::InvalidArgument(format!("checkpoint {s} is not a grid time in [t, T]")));
            }
            let last = i == sol.grid.n_steps();
            let abs: Vec<f64> = (0..sol.n_paths)
                .map(|j| {
                    let xs = sol.x_at(j, i)[0];
                    let u = if last { problem.coeffs.h(&[xs])[0] } else { surface.value_at(s, xs)[0] };
                    (sol.y_at(j, i)[0] - u).abs()
                })
                .collect();
            Ok(MarkovRow { s, residual: mean(&abs), se: std_error(&abs) })
        })
        .collect()
}

/// Scalar path ensembles of one sequence member.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberEnsembles {
    pub state: PathEnsemble,
    pub y: PathEnsemble,
    pub k1: PathEnsemble,
    pub k2: PathEnsemble,
    pub m: PathEnsemble,
}

impl MemberEnsembles {
    fn from_solution(sol: &BackwardSolution) -> Result<Self> {
        let times = sol.grid.times();
        let n = sol.n_paths;
        let state = (0..n).map(|j| (0..sol.n_times()).map(|i| sol.x_at(j, i)[0]).collect()).collect();
        Ok(MemberEnsembles {
            state: PathEnsemble::new(times.clone(), state)?,
            y: PathEnsemble::new(times.clone(), (0..n).map(|j| sol.y_path(j, 0)).collect())?,
            k1: PathEnsemble::new(times.clone(), (0..n).map(|j| sol.k1_path(j, 0)).collect())?,
            k2: PathEnsemble::new(times.clone(), (0..n).map(|j| sol.k2_path(j, 0)).collect())?,
            m: PathEnsemble::new(times, (0..n).map(|j| sol.martingale_path(j, 0)).collect())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEnsembles {
    pub members: Vec<MemberEnsembles>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceTightness {
    pub y: TightnessReport,
    pub k1: TightnessReport,
    pub k2: TightnessReport,
    pub m: TightnessReport,
    /// Sum of the four totals per member.
    pub totals: Vec<f64>,
}

impl SequenceTightness {
    pub fn reports(&self) -> [(&'static str, &TightnessReport); 4] {
        [("Y", &self.y), ("K1", &self.k1), ("K2", &self.k2), ("M", &self.m)]
    }

    /// Every process bounded on its own.
    pub fn bounded(&self) -> bool {
        self.reports().iter().all(|(_, r)| r.bounded())
    }

    /// `max / min` of the per-member sum of the four totals.
    pub fn total_ratio(&self) -> f64 {
        let max = self.totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.totals.iter().copied().fold(f64::INFINITY, f64::min);
        if max == 0.0 {
            1.0
        } else if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    }

    /// The summed totals of the tuple `(Y, K1, K2, M)` stay within [`BOUNDED_RATIO`].
    pub fn totals_bounded(&self) -> bool {
        self.total_ratio() <= BOUNDED_RATIO
    }

    /// `process,n,cv,esup,total` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("process,n,cv,esup,total\n");
        for (name, rep) in self.reports() {
            for r in &rep.rows {
                let _ = writeln!(out, "{name},{},{},{},{}", r.n, r.cv, r.esup, r.total);
            }
        }
        out
    }
}

impl SequenceEnsembles {
    pub fn diagnose(&self, pi: &Partition, regressor: Regressor) -> Result<SequenceTightness> {
        let run = |pick: fn(&MemberEnsembles) -> &PathEnsemble| {
            let pairs: Vec<(PathEnsemble, PathEnsemble)> =
                self.members.iter().map(|m| (pick(m).clone(), m.state.clone())).collect();
            s_tightness_diagnostic(&pairs, pi, regressor)
        };
        let y = run(|m| &m.y)?;
        let k1 = run(|m| &m.k1)?;
        let k2 = run(|m| &m.k2)?;
        let m = run(|m| &m.m)?;
        let totals = (0..self.members.len())
            .map(|k| y.rows[k].total + k1.rows[k].total + k2.rows[k].total + m.rows[k].total)
            .collect();
        Ok(SequenceTightness { y, k1, k2, m, totals })
    }

    /// Negative control: member `n` (1-based) has `Y` multiplied by `n`.
    pub fn with_scaled_y(&self) -> Self {
        let members = self
            .members
            .iter()
            .enumerate()
            .map(|(k, m)| MemberEnsembles { y: m.y.scaled((k + 1) as f64), ..m.clone() })
            .collect();
        SequenceEnsembles { members }
    }
}

/// Regression-engine ensembles for paths started at each `(t_n, x_n)`.
/// Member `n` runs on its own stream.
pub fn sequence_ensembles(problem: &Problem, sequence: &[(f64, f64)], cfg: &EngineConfig) -> Result<SequenceEnsembles> {
    if sequence.len() < 3 {
        return Err(Error::InvalidArgument("tightness along a sequence needs at least three members".into()));
    }
    if problem.coeffs.value_dim != 1 {
        return Err(Error::InvalidArgument("tightness diagnostic uses scalar Y".into()));
    }
    let members = sequence
        .par_iter()
        .enumerate()
        .map(|(k, &(t, x))| {
            let sol = regression_paths(problem, t, x, cfg, cfg.key().child("member", k as u64))?;
            MemberEnsembles::from_solution(&sol)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceEnsembles { members })
}

/// `CV_T + E sup` of `(Y, K1, K2, M)` along the sequence on a uniform
/// partition with `n_intervals` cells; `n_t` must be a multiple of it.
pub fn tightness_along_sequence(
    problem: &Problem,
    sequence: &[(f64, f64)],
    cfg: &EngineConfig,
    n_intervals: usize,
    regressor: Regressor,
) -> Result<SequenceTightness> {
    if n_intervals == 0 || !cfg.n_t().is_multiple_of(n_intervals) {
        return Err(Error::InvalidArgument(format!("{n_intervals} intervals do not divide {} steps", cfg.n_t())));
    }
    let pi = Partition::uniform(problem.coeffs.horizon, n_intervals)?;
    sequence_ensembles(problem, sequence, cfg)?.diagnose(&pi, regressor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::ConvexSpec;
    use crate::presets::PresetName;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn constant(p: PresetName, c: f64) -> Problem {
        let mut p = Problem::preset(p);
        p.coeffs.terminal = Arc::new(move |_, o| o[0] = c);
        p
    }

    #[test]
    fn terminal_time_is_exact() {
        let p = Problem::preset(PresetName::Drifted);
        for cfg in [EngineConfig::grid(10, 11, 1), EngineConfig::regression(10, 1000, 1)] {
            let e = evaluate_u(&p, 0.5, 0.3, &cfg).unwrap();
            assert_eq!(e.value, 0.65);
            assert_eq!(e.se, 0.0);
        }
    }

    #[test]
    fn rejects_points_outside() {
        let p = Problem::preset(PresetName::Heat);
        let cfg = EngineConfig::grid(10, 11, 1);
        assert!(evaluate_u(&p, 0.6, 0.0, &cfg).is_err());
        assert!(evaluate_u(&p, 0.1, 1.5, &cfg).is_err());
    }

    #[test]
    fn constant_data_has_zero_gaps() {
        let p = constant(PresetName::Heat, 0.7);
        let seq = geometric_sequence((0.0, 0.0), (0.25, 0.5), 4);
        for cfg in [EngineConfig::grid(16, 17, 3), EngineConfig::regression(16, 1000, 3)] {
            let tab = continuity_modulus(&p, (0.0, 0.0), &seq, &cfg).unwrap();
            assert!(tab.rows.iter().all(|r| r.gap < 1e-12), "{tab:?}");
        }
    }

    #[test]
    fn heat_regression_matches_closed_form() {
        let p = Problem::preset(PresetName::Heat);
        let e = evaluate_u(&p, 0.0, 0.0, &EngineConfig::regression(50, 20_000, 5)).unwrap();
        let exact = (-PI * PI / 4.0).exp();
        assert!(e.se > 0.0);
        assert!((e.value - exact).abs() < 2e-2 + 3.0 * e.se, "{e:?} vs {exact}");
    }

    #[test]
    fn box_range_holds_on_the_surface() {
        let mut p = Problem::preset(PresetName::Drifted);
        p.phi = ConvexSpec::indicator_box(vec![-0.8], vec![0.8]).unwrap();
        p.coeffs.terminal = Arc::new(|x, o| o[0] = 0.8 * x[0]);
        let s = value_surface(&p, &EngineConfig::grid(40, 41, 1)).unwrap();
        assert!(s.u.iter().all(|v| v.abs() <= 0.8));
    }

    #[test]
    fn heat_modulus_in_x() {
        let p = Problem::preset(PresetName::Heat);
        let seq = geometric_sequence((0.0, 0.25), (0.0, 0.5), 7);
        let tab = continuity_modulus(&p, (0.0, 0.25), &seq, &EngineConfig::grid(64, 513, 1)).unwrap();
        assert!(tab.exponent_x.unwrap() >= 0.9, "{tab:?}");
        assert!(tab.exponent_t.is_none());
        assert!(tab.monotone(0.0, 0.0));
        let csv = tab.to_csv();
        assert!(csv.starts_with("n,dt,dx,gap,se\n"));
        assert!(csv.trim_end().ends_with(",,"));
    }

    #[test]
    fn deterministic_flow_is_markov() {
        let mut p = Problem::preset(PresetName::LinearOde);
        p.coeffs.terminal = Arc::new(|x, o| o[0] = 1.0 + 0.5 * x[0]);
        let rows = markov_consistency(
            &p,
            &EngineConfig::grid(50, 21, 1),
            &EngineConfig::regression(50, 1000, 1),
            0.0,
            0.5,
            &[0.0, 0.5, 1.0],
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.residual < 1e-12), "{rows:?}");
    }

    #[test]
    fn markov_residual_vanishes_at_terminal_time() {
        let p = Problem::preset(PresetName::Heat);
        let rows = markov_consistency(
            &p,
            &EngineConfig::grid(20, 21, 1),
            &EngineConfig::regression(20, 1000, 1),
            0.0,
            0.1,
            &[0.5],
        )
        .unwrap();
        assert_eq!(rows[0].residual, 0.0);
    }

    #[test]
    fn constant_data_is_tight() {
        let p = constant(PresetName::Heat, 0.5);
        let seq = geometric_sequence((0.0, 0.0), (0.25, 0.5), 3);
        let rep = tightness_along_sequence(&p, &seq, &EngineConfig::regression(20, 1000, 1), 10, Regressor::default())
            .unwrap();
        for (_, r) in rep.reports() {
            assert!(r.rows.iter().all(|row| row.cv < 1e-12));
        }
        assert!(rep.y.rows.iter().all(|r| (r.esup - 0.5).abs() < 1e-15));
        assert!(rep.bounded());
        assert!((rep.total_ratio() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_control_is_flagged() {
        let p = Problem::preset(PresetName::Heat);
        let seq = geometric_sequence((0.0, 0.0), (0.25, 0.5), 4);
        let ens = sequence_ensembles(&p, &seq, &EngineConfig::regression(20, 2000, 1)).unwrap();
        let pi = Partition::uniform(0.5, 10).unwrap();
        let base = ens.diagnose(&pi, Regressor::default()).unwrap();
        let scaled = ens.with_scaled_y().diagnose(&pi, Regressor::default()).unwrap();
        assert!(base.y.bounded());
        assert!(!scaled.y.bounded());
        assert!(scaled.total_ratio() > base.total_ratio() + 1.0);
        assert!(scaled.y.trend > 0.5);
    }

    #[test]
    fn sequences_need_three_members() {
        let p = Problem::preset(PresetName::Heat);
        let cfg = EngineConfig::regression(20, 1000, 1);
        assert!(tightness_along_sequence(&p, &[(0.0, 0.0), (0.1, 0.0)], &cfg, 10, Regressor::default()).is_err());
        let seq = geometric_sequence((0.0, 0.0), (0.25, 0.5), 3);
        assert!(tightness_along_sequence(&p, &seq, &cfg, 7, Regressor::default()).is_err());
    }

    #[test]
    fn runs_are_reproducible() {
        let p = Problem::preset(PresetName::ObstacleInterior);
        let cfg = EngineConfig::regression(20, 1000, 9);
        let a = evaluate_points(&p, &[(0.0, 0.1), (0.1, -0.3)], &cfg).unwrap();
        let b = evaluate_points(&p, &[(0.0, 0.1), (0.1, -0.3)], &cfg).unwrap();
        assert_eq!(a, b);
        let g = EngineConfig::grid(20, 21, 9);
        assert_eq!(value_surface(&p, &g).unwrap(), value_surface(&p, &g).unwrap());
    }
}
