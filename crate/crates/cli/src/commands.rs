//! One function per subcommand. Each resolves its inputs, writes CSVs
//! under the output directory and finishes with a manifest.

use std::fmt::Write as _;

use anyhow::Result;
use reflekt_core::backward::moment_bound_check;
use reflekt_core::cadlag::Partition;
use reflekt_core::forward::{simulate_ensemble_with, TimeGrid};
use reflekt_core::pde_oracle::solve_pvi;
use reflekt_core::valuefn::{
    continuity_modulus, geometric_sequence, regression_paths, sequence_ensembles, value_surface, Engine,
};
use reflekt_core::{cadlag, convex, StreamKey};

use crate::config::{ConfigErrors, ExperimentConfig};
use crate::manifest::{Manifest, Run};

fn start(cfg: &ExperimentConfig, command: &str) -> Result<Run> {
    Run::start(cfg.out_dir(), command, cfg.seed, &cfg.canonical())
}

pub fn validate_assumptions(cfg: &ExperimentConfig) -> Result<Manifest> {
    let p = cfg.problem()?;
    let report = cfg.assumption_report(&p)?;
    let mut run = start(cfg, "validate-assumptions")?;
    let mut csv = String::from("check,residual,tolerance,passed\n");
    for c in &report.checks {
        let _ = writeln!(csv, "{},{:e},{:e},{}", c.name, c.residual, report.tolerance, c.passed);
    }
    run.write("assumptions.csv", &csv)?;
    run.note("passed", report.passed());
    run.note("max_residual", report.max_residual());
    let manifest = run.finish()?;
    if !report.passed() {
        return Err(ConfigErrors(
            report.failures().map(|c| format!("assumption {}: residual {:.3e}", c.name, c.residual)).collect(),
        )
        .into());
    }
    Ok(manifest)
}

pub fn simulate_forward(cfg: &ExperimentConfig) -> Result<Manifest> {
    let p = cfg.validated_problem()?;
    let f = &cfg.forward;
    let grid = TimeGrid::new(p.coeffs.horizon, f.n_steps)?;
    let key = StreamKey::new(cfg.seed, "cli-forward");
    let ens = simulate_ensemble_with(&p.domain, &p.coeffs, grid, f.t, &f.x, f.n_paths, f.reflection, key)?;
    let mut run = start(cfg, "simulate-forward")?;
    let d = p.coeffs.state_dim;

    let mut csv = String::from("path_id,t");
    for k in 0..d {
        let _ = write!(csv, ",x{k}");
    }
    csv.push_str(",A\n");
    for (j, path) in ens.paths.iter().take(f.write_paths).enumerate() {
        for i in 0..=grid.n_steps() {
            let _ = write!(csv, "{j},{}", grid.time(i));
            for v in path.x_at(i) {
                let _ = write!(csv, ",{v}");
            }
            let _ = writeln!(csv, ",{}", path.a[i]);
        }
    }
    run.write("forward_paths.csv", &csv)?;

    let n = ens.len() as f64;
    let mut summary = String::from("t,mean_x0,mean_A,reflected\n");
    for i in 0..=grid.n_steps() {
        let mean_x = ens.paths.iter().map(|q| q.x_at(i)[0]).sum::<f64>() / n;
        let mean_a = ens.paths.iter().map(|q| q.a[i]).sum::<f64>() / n;
        let touching = ens.paths.iter().filter(|q| i > 0 && q.da(i - 1) > 0.0).count() as f64 / n;
        let _ = writeln!(summary, "{},{mean_x},{mean_a},{touching}", grid.time(i));
    }
    run.write("forward_summary.csv", &summary)?;
    let a_t: Vec<f64> = ens.paths.iter().map(|q| q.terminal_local_time()).collect();
    run.note("mean_terminal_local_time", a_t.iter().sum::<f64>() / n);
    run.note("mean_exp_terminal_local_time", a_t.iter().map(|a| a.exp()).sum::<f64>() / n);
    run.finish()
}

pub fn solve(cfg: &ExperimentConfig) -> Result<Manifest> {
    let p = cfg.validated_problem()?;
    let ec = cfg.engine_config();
    let mut run = start(cfg, "solve")?;
    match ec.engine {
        Engine::Grid { .. } => {
            let s = value_surface(&p, &ec)?;
            run.note("u0", s.value_at(cfg.solve.t, cfg.solve.x)[0]);
            run.write("value_surface.csv", &s.to_csv())?;
        }
        Engine::Regression { .. } => {
            let key = StreamKey::new(cfg.seed, "cli-solve");
            let sol = regression_paths(&p, cfg.solve.t, cfg.solve.x, &ec, key)?;
            let y0 = sol.y0(key.child("y0", 0));
            let mut csv = String::from("component,value,se\n");
            for (c, e) in y0.iter().enumerate() {
                let _ = writeln!(csv, "{c},{},{}", e.value, e.se);
            }
            run.note("u0", y0[0].value);
            run.note("u0_se", y0[0].se);
            run.write("y0.csv", &csv)?;
            run.write("regression_paths.csv", &sol.paths_csv(cfg.solve.write_paths))?;
            let key = key.child("moments", 0);
            run.write("moments.csv", &moment_bound_check(std::slice::from_ref(&sol), 2.0, key)?.to_csv())?;
        }
    }
    run.finish()
}

pub fn value_surface_cmd(cfg: &ExperimentConfig) -> Result<Manifest> {
    let p = cfg.validated_problem()?;
    let s = value_surface(&p, &cfg.engine_config())?;
    let mut run = start(cfg, "value-surface")?;
    run.write("value_surface.csv", &s.to_csv())?;
    run.note("finite", s.is_finite());
    run.finish()
}

pub fn continuity(cfg: &ExperimentConfig) -> Result<Manifest> {
    let p = cfg.validated_problem()?;
    let c = &cfg.continuity;
    let limit = (c.limit[0], c.limit[1]);
    let seq = geometric_sequence(limit, (c.direction[0], c.direction[1]), c.n_max);
    let table = continuity_modulus(&p, limit, &seq, &cfg.engine_config())?;
    let mut run = start(cfg, "continuity")?;
    run.write("continuity.csv", &table.to_csv())?;
    run.note("limit_value", table.limit.value);
    run.note("last_gap", table.rows.last().map_or(0.0, |r| r.gap));
    run.note("exponent_x", table.exponent_x);
    run.note("exponent_t", table.exponent_t);
    run.finish()
}

pub fn compare_pde(cfg: &ExperimentConfig) -> Result<Manifest> {
    let p = cfg.validated_problem()?;
    let oracle = solve_pvi(&p.domain, &p.coeffs, &p.phi, &p.psi, cfg.oracle)?;
    let grid = value_surface(&p, &cfg.grid_config(cfg.compare.n_t, cfg.compare.n_x))?;
    let mut csv = String::from("t,x,oracle,grid,gap\n");
    let mut worst = 0.0f64;
    for (i, &t) in grid.times.iter().enumerate() {
        for (j, &x) in grid.xs.iter().enumerate() {
            let o = oracle.value_at(t, x)[0];
            let g = grid.at(i, j)[0];
            worst = worst.max((o - g).abs());
            let _ = writeln!(csv, "{t},{x},{o},{g},{}", (o - g).abs());
        }
    }
    let mut run = start(cfg, "compare-pde")?;
    run.write("oracle_surface.csv", &oracle.to_csv())?;
    run.write("compare.csv", &csv)?;
    run.note("max_gap", worst);
    run.note("tolerance", cfg.compare.tolerance);
    run.note("within_tolerance", worst <= cfg.compare.tolerance);
    run.finish()
}

pub fn tightness(cfg: &ExperimentConfig) -> Result<Manifest> {
    let p = cfg.validated_problem()?;
    let ec = cfg.engine_config();
    if !matches!(ec.engine, Engine::Regression { .. }) {
        return Err(
            ConfigErrors(vec!["engine: tightness needs the regression engine (--engine regression)".into()]).into()
        );
    }
    let t = &cfg.tightness;
    let pi = Partition::uniform(p.coeffs.horizon, t.n_intervals)?;
    let ens = sequence_ensembles(&p, &t.sequence(), &ec)?;
    let rep = ens.diagnose(&pi, t.regressor())?;
    let control = ens.with_scaled_y().diagnose(&pi, t.regressor())?;
    let mut run = start(cfg, "tightness")?;
    run.write("tightness.csv", &rep.to_csv())?;
    run.write("tightness_control.csv", &control.to_csv())?;
    run.note("total_ratio", rep.total_ratio());
    run.note("bounded", rep.totals_bounded());
    run.note("control_total_ratio", control.total_ratio());
    run.note("control_bounded", control.totals_bounded());
    run.finish()
}

pub fn convex_selftest(cfg: &ExperimentConfig) -> Result<Manifest> {
    let rows = convex::selftest(&convex::builtin_specs(), cfg.selftest.trials, StreamKey::new(cfg.seed, "cli-convex"))?;
    let mut csv = String::from(convex::SelftestRow::csv_header());
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    let worst = rows.iter().map(|r| r.max_residual()).fold(0.0, f64::max);
    let mut run = start(cfg, "convex-selftest")?;
    run.write("convex_selftest.csv", &csv)?;
    run.note("max_residual", worst);
    run.finish()
}

pub fn cadlag_selftest(cfg: &ExperimentConfig) -> Result<Manifest> {
    let s = &cfg.selftest;
    let r = cadlag::selftest(s.depth, s.pairs, StreamKey::new(cfg.seed, "cli-cadlag"))?;
    let mut run = start(cfg, "cadlag-selftest")?;
    run.write("cadlag_selftest.csv", &r.to_csv())?;
    run.note("tv_error", r.tv_error);
    run.note("tv_monotone", r.tv_monotone);
    run.note("ibp_max", r.ibp_max);
    run.note("side_gap_max", r.side_gap_max);
    run.finish()
}
