use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use nodiscard::bell::{optimize_state, DEFAULT_EIGEN_TOL};
use nodiscard::capacity::capacity_scan;
use nodiscard::hilbert::OutcomeTable;
use nodiscard::protocol::{run_practical, run_zg_entangled, SimParams};

fn born_table(c: &mut Criterion) {
    let mut group = c.benchmark_group("born_table");
    for d in [4, 16, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| OutcomeTable::born(black_box(d)).unwrap())
        });
    }
    group.finish();
}

fn optimal_state(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize_state");
    for d in [4, 20, 64] {
        group.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            b.iter(|| optimize_state(black_box(d), DEFAULT_EIGEN_TOL).unwrap())
        });
    }
    group.finish();
}

fn capacities(c: &mut Criterion) {
    c.bench_function("capacity_scan_2_64", |b| {
        b.iter(|| capacity_scan(2, black_box(64)).unwrap())
    });
}

fn protocols(c: &mut Criterion) {
    let params = SimParams::new(10_000, 1);
    let state = optimize_state(8, DEFAULT_EIGEN_TOL).unwrap().state;
    c.bench_function("practical_d8_10k", |b| {
        b.iter(|| run_practical(8, 0.5, false, black_box(&params)).unwrap())
    });
    c.bench_function("zg_d8_10k", |b| {
        b.iter(|| run_zg_entangled(&state, 0.1, black_box(&params)).unwrap())
    });
}

criterion_group!(benches, born_table, optimal_state, capacities, protocols);
criterion_main!(benches);
