use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use reflekt_bench::{grid_engine, problem, regression_engine, SEED};
use reflekt_core::forward::simulate_ensemble;
use reflekt_core::pde_oracle::{solve_pvi, FDGrid};
use reflekt_core::valuefn::{evaluate_u, value_surface};
use reflekt_core::{ConvexSpec, MoreauParams, PresetName, StreamKey, TimeGrid};

fn convex(c: &mut Criterion) {
    let eps = MoreauParams::new(0.1).unwrap();
    let specs = [
        ("quadratic", ConvexSpec::quadratic(1.5, 1).unwrap()),
        ("indicator_box", ConvexSpec::indicator_box(vec![-1.0], vec![1.0]).unwrap()),
        ("custom_1d", ConvexSpec::custom_1d(vec![-1.0, 0.0, 0.5, 2.0], vec![1.0, 0.0, 0.1, 1.5]).unwrap()),
    ];
    let mut g = c.benchmark_group("resolvent");
    for (name, spec) in &specs {
        g.bench_function(*name, |b| b.iter(|| spec.resolvent(eps, black_box(&[1.7])).unwrap()));
    }
    g.finish();
}

fn forward(c: &mut Criterion) {
    let p = problem(PresetName::Drifted);
    let grid = TimeGrid::new(p.coeffs.horizon, 200).unwrap();
    c.bench_function("forward_ensemble_1000x200", |b| {
        b.iter(|| {
            simulate_ensemble(&p.domain, &p.coeffs, grid, 0.0, &[0.5], 1000, StreamKey::new(SEED, "bench")).unwrap()
        })
    });
}

fn engines(c: &mut Criterion) {
    let mut g = c.benchmark_group("engines");
    g.sample_size(10);
    for name in [PresetName::Heat, PresetName::ObstacleBoundary] {
        let p = problem(name);
        g.bench_with_input(BenchmarkId::new("grid_surface", name), &p, |b, p| {
            b.iter(|| value_surface(p, &grid_engine()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("regression_point", name), &p, |b, p| {
            b.iter(|| evaluate_u(p, 0.0, 0.0, &regression_engine()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("pde_oracle", name), &p, |b, p| {
            let fd = FDGrid::new(100, 500, 0.5).unwrap();
            b.iter(|| solve_pvi(&p.domain, &p.coeffs, &p.phi, &p.psi, fd).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, convex, forward, engines);
criterion_main!(benches);
