//! Parallel vs sequential throughput on the crate's hot loops.
//!
//! Both code paths are always compiled (the `parallel` feature only
//! switches the public dispatch), so one run compares them directly:
//!
//! ```text
//! cargo bench -p switchstab
//! ```

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use switchstab::exec;
use switchstab::numerics::Matrix;
use switchstab::synthesis::{sampled_residual, Feedback, SolverConfig};
use switchstab::system::{sample_dataset, three_mode_benchmark};
use switchstab::{alternate, jsr_bracket, SymMatrix};

fn bench_residual_scan(c: &mut Criterion) {
    let sys = three_mode_benchmark();
    let mut group = c.benchmark_group("residual_scan");
    for &n in &[1_000usize, 20_000, 200_000] {
        let data = sample_dataset(&sys, n, 7).unwrap();
        let k = Feedback::new(Matrix::from_rows(&[vec![-0.2886, -0.7086]])).unwrap();
        let p = SymMatrix::from_rows_symmetrized(&[vec![4.3990, 6.7572], vec![6.7572, 14.4331]]);
        group.bench_with_input(BenchmarkId::new("dispatch", n), &n, |b, _| {
            b.iter(|| {
                black_box(sampled_residual(
                    black_box(0.84),
                    &p,
                    &k,
                    &data,
                    sys.input_matrix(),
                ))
            })
        });
    }
    group.finish();
}

fn bench_scored_reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("max_scored");
    for &n in &[1_000usize, 100_000, 1_000_000] {
        let items: Vec<f64> = (0..n).map(|i| ((i * 2654435761) % n) as f64 / n as f64).collect();
        let score = |_: usize, x: &f64| (x * 37.0).sin() * x;
        group.bench_with_input(BenchmarkId::new("seq", n), &n, |b, _| {
            b.iter(|| black_box(exec::seq::max_scored(black_box(&items), score)))
        });
        group.bench_with_input(BenchmarkId::new("par", n), &n, |b, _| {
            b.iter(|| black_box(exec::par::max_scored(black_box(&items), score)))
        });
    }
    group.finish();
}

fn bench_product_bracket(c: &mut Criterion) {
    let sys = three_mode_benchmark();
    let k = Matrix::from_rows(&[vec![-0.2886, -0.7086]]);
    let closed = sys.closed_loop_modes(&k);
    let mut group = c.benchmark_group("jsr_bracket");
    group.sample_size(10);
    for &depth in &[8usize, 10] {
        group.bench_with_input(BenchmarkId::new("dispatch", depth), &depth, |b, _| {
            b.iter(|| black_box(jsr_bracket(black_box(&closed), depth).unwrap()))
        });
    }
    group.finish();
}

fn bench_synthesis(c: &mut Criterion) {
    let sys = three_mode_benchmark();
    let data = sample_dataset(&sys, 1000, 7).unwrap();
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("alternate");
    group.sample_size(10);
    group.bench_function("benchmark_n1000", |b| {
        b.iter(|| black_box(alternate(&data, sys.input_matrix(), &cfg).unwrap()))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_residual_scan,
    bench_scored_reduction,
    bench_product_bracket,
    bench_synthesis
);
criterion_main!(benches);
