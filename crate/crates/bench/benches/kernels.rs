use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracsrc_bench::{laplacian, spatial_factor, temporal_factor};
use fracsrc_core::forward::{modal_weights, solve_modal_convolution, solve_timestep_oracle};
use fracsrc_core::inverse::build_point_kernel;
use fracsrc_core::{ml_eval, MLParams, TemporalGrid};
use std::hint::black_box;

fn mittag_leffler(c: &mut Criterion) {
    let mut group = c.benchmark_group("ml_eval");
    let p = MLParams::new(0.5, 0.75).unwrap();
    for x in [0.5, 3.0, 50.0, 1e4] {
        group.bench_with_input(BenchmarkId::from_parameter(x), &x, |b, &x| b.iter(|| ml_eval(p, black_box(-x))));
    }
    group.finish();
}

fn weights(c: &mut Criterion) {
    let mut group = c.benchmark_group("modal_weights");
    for n in [101, 401] {
        let grid = TemporalGrid::new(1.0, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, g| b.iter(|| modal_weights(0.5, 0.5, black_box(40.0), g)));
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let (spec, e) = laplacian(99);
    let f = spatial_factor(&spec);
    let grid = TemporalGrid::new(1.0, 101).unwrap();
    let g = temporal_factor(grid);
    let mut group = c.benchmark_group("forward");
    group.sample_size(10);
    group.bench_function("modal_convolution_99x101", |b| b.iter(|| solve_modal_convolution(&e, &f, &g, 0.5, &grid).unwrap()));
    group.bench_function("l1_oracle_99x101", |b| b.iter(|| solve_timestep_oracle(&spec, &f, &g, 0.5, &grid).unwrap()));
    group.bench_function("point_kernel_99x101", |b| b.iter(|| build_point_kernel(&e, &f, 0.5, 49, &grid).unwrap()));
    group.finish();
}

criterion_group!(benches, mittag_leffler, weights, solvers);
criterion_main!(benches);
