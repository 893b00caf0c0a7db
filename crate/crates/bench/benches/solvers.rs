//! Throughput of the coverage oracle and both greedy solvers on random
//! instances shaped like the benchmark campaign (n=10, m=15).

use blds_bench::campaign_instance;
use blds_core::objective::Evaluator;
use blds_core::rational::rat;
use blds_core::solvers::{exact_solve, fast_greedy_solve, greedy_solve, FastGreedyConfig};
use blds_core::BitSet;
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn bench_coverage(c: &mut Criterion) {
    let inst = campaign_instance(10, 15, 5, 42);
    let eval = Evaluator::new(&inst);
    let half = BitSet::from_bits(0b10101);
    c.bench_function("coverage z, n=10 m=15", |b| {
        b.iter(|| black_box(eval.z_scaled(black_box(half))))
    });
}

fn bench_greedy(c: &mut Criterion) {
    let inst = campaign_instance(10, 15, 5, 42);
    c.bench_function("greedy, n=10 m=15", |b| {
        b.iter(|| greedy_solve(black_box(&inst)).unwrap())
    });
}

fn bench_fast_greedy(c: &mut Criterion) {
    let inst = campaign_instance(10, 15, 5, 42);
    let cfg = FastGreedyConfig::new(rat(1, 10)).unwrap();
    c.bench_function("fast greedy eps=1/10, n=10 m=15", |b| {
        b.iter(|| fast_greedy_solve(black_box(&inst), &cfg).unwrap())
    });
}

fn bench_exact(c: &mut Criterion) {
    let inst = campaign_instance(10, 15, 5, 42);
    c.bench_function("brute force, n=10 m=15", |b| {
        b.iter(|| exact_solve(black_box(&inst)).unwrap())
    });
}

criterion_group!(benches, bench_coverage, bench_greedy, bench_fast_greedy, bench_exact);
criterion_main!(benches);
