use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use robinlab::assembly::robin_operator;
use robinlab::critpoints::census;
use robinlab::solvers::{continue_branch, robin_eigenpair, solve_torsion, Boundary, SolverOptions, StepPolicy};
use robinlab::{make_domain, triangulate, DomainSpec, Nonlinearity};
use robinlab_bench::{corrugated, disk};

fn meshing(c: &mut Criterion) {
    let curve = make_domain(&DomainSpec::disk(1.0)).unwrap();
    let mut g = c.benchmark_group("triangulate_disk");
    for h in [0.1, 0.05, 0.025] {
        g.bench_with_input(BenchmarkId::from_parameter(h), &h, |b, &h| b.iter(|| triangulate(&curve, h).unwrap()));
    }
    g.finish();
    c.bench_function("make_domain_corrugated", |b| {
        b.iter(|| make_domain(&DomainSpec::corrugated_default()).unwrap())
    });
}

fn solves(c: &mut Criterion) {
    let opts = SolverOptions::default();
    let (_, mesh) = disk(0.03);
    c.bench_function("assemble_robin_h0.03", |b| b.iter(|| robin_operator(&mesh, 1.0)));
    c.bench_function("torsion_h0.03", |b| b.iter(|| solve_torsion(&mesh, 1.0, &opts).unwrap()));
    c.bench_function("eigenpair_h0.03", |b| b.iter(|| robin_eigenpair(&mesh, 1.0, &opts).unwrap()));
    let (_, coarse) = disk(0.08);
    let policy = StepPolicy::default();
    let mut g = c.benchmark_group("branch");
    g.sample_size(10);
    g.bench_function("gelfand_h0.08", |b| {
        b.iter(|| continue_branch(&coarse, Boundary::Robin(1.0), Nonlinearity::GelfandExp, &policy, &opts).unwrap())
    });
    g.finish();
}

fn critical_points(c: &mut Criterion) {
    let opts = SolverOptions::default();
    let (_, mesh) = corrugated(0.05);
    let u = solve_torsion(&mesh, 100.0, &opts).unwrap();
    c.bench_function("census_corrugated_h0.05", |b| b.iter(|| census(&mesh, &u, Some(100.0)).unwrap()));
}

criterion_group!(benches, meshing, solves, critical_points);
criterion_main!(benches);
