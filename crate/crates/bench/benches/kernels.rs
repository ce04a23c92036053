use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dynplast_core::config::SimConfig;
use dynplast_core::convex::{project_minus_knu, psi_grad, BoundaryWeight};
use dynplast_core::dynamics::{step, Problem};
use dynplast_core::{ElasticitySet, Metric, Sym2, Sym3};
use std::hint::black_box;

fn scenario(name: &str) -> Problem {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    SimConfig::from_path(&path).unwrap().resolve().unwrap()
}

fn polytope() -> ElasticitySet<2> {
    let mut planes = Vec::new();
    for k in 0..6 {
        let a = k as f64 * std::f64::consts::PI / 6.0;
        let n = Sym2::new(a.cos(), -a.cos(), a.sin());
        planes.push((n, 1.0));
        planes.push((n.scale(-1.0), 1.0));
    }
    planes.push((Sym2::identity(), 2.0));
    planes.push((Sym2::identity().scale(-1.0), 2.0));
    ElasticitySet::halfspaces(planes).unwrap()
}

fn projections(c: &mut Criterion) {
    let sigma = Sym2::new(1.3, -0.4, 0.9);
    let sigma3 = Sym3::new(1.3, -0.4, 0.2, 0.9, -0.3, 0.6);
    let cyl = ElasticitySet::<2>::cylinder(0.42).unwrap();
    let cyl3 = ElasticitySet::<3>::cylinder(0.42).unwrap();
    let poly = polytope();
    let mut g = c.benchmark_group("project");
    g.bench_function("cylinder_2d", |b| b.iter(|| cyl.project(black_box(&sigma), &Metric::Frobenius)));
    g.bench_function("cylinder_3d", |b| b.iter(|| cyl3.project(black_box(&sigma3), &Metric::Frobenius)));
    g.bench_function("halfspaces_2d", |b| b.iter(|| poly.project(black_box(&sigma), &Metric::Frobenius)));
    g.bench_function("minus_knu_halfspaces", |b| {
        b.iter(|| project_minus_knu(&poly, &[0.6, 0.8], black_box(&[2.0, -1.5])))
    });
    g.finish();
}

fn gradient(c: &mut Criterion) {
    let cyl = ElasticitySet::<2>::cylinder(0.42).unwrap();
    let ball = ElasticitySet::<2>::ball(1.0).unwrap();
    let w = BoundaryWeight::new(100.0).unwrap();
    let mut g = c.benchmark_group("psi_grad");
    g.bench_function("ball", |b| b.iter(|| psi_grad(&ball, &[1.0, 0.0], w, black_box(&[0.3, 0.2]))));
    g.bench_function("cylinder", |b| b.iter(|| psi_grad(&cyl, &[1.0, 0.0], w, black_box(&[0.3, 0.2]))));
    g.finish();
}

fn time_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("step_64x64");
    for name in ["plastic_pulse", "standing_wave"] {
        let problem = scenario(name);
        let state = problem.initial_state().unwrap();
        g.bench_function(name, |b| {
            b.iter_batched(
                || state.clone(),
                |s| step(&problem.model, &s, problem.params, problem.mode, &problem.force).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, projections, gradient, time_step);
criterion_main!(benches);
