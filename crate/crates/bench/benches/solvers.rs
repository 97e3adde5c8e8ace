use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ttrap_bench::{bound_pair, oracle_fixture, trapped};
use ttrap_core::oracle::exact_oracle;
use ttrap_core::propagator::step;
use ttrap_core::trap_modes::{solve_eigenmodes, Harmonic};
use ttrap_core::StepPlan;

fn strang_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("strang_step");
    for n in [128, 256] {
        let setup = trapped(n).expect("fixture");
        let plan = StepPlan::new(&setup.system, 1e-3).expect("plan");
        let mut st = bound_pair(&setup).expect("state");
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| step(black_box(&mut st), &plan).expect("step"))
        });
    }
    group.finish();
}

fn eigen_solve(c: &mut Criterion) {
    let setup = trapped(256).expect("fixture");
    let (rho, delta) = (setup.system.rho, setup.system.delta);
    c.bench_function("eigenmodes_n256", |b| {
        b.iter(|| solve_eigenmodes(black_box(&setup.system.potential), Harmonic::Sh, rho, delta, 2).expect("solve"))
    });
}

fn oracle(c: &mut Criterion) {
    let (sys, st) = oracle_fixture(6).expect("fixture");
    c.bench_function("exact_oracle_n6", |b| {
        b.iter(|| exact_oracle(&sys, black_box(&st), 0.1).expect("oracle"))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = strang_step, eigen_solve, oracle
}
criterion_main!(benches);
