use std::hint::black_box;

use carnot::catalog::{free_nilpotent, heisenberg};
use carnot::curves::{horizontal_lift, pansu_quotient, HorizontalControl};
use carnot::pdiff::{implicit_function, mean_value_ratio, GridSpec, MviOptions, NewtonOptions, PDMap};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn lifts(c: &mut Criterion) {
    let mut group = c.benchmark_group("horizontal_lift");
    for g in [heisenberg(1), free_nilpotent(2, 3).unwrap()] {
        let control = HorizontalControl::circle(2, 1.0);
        group.bench_with_input(BenchmarkId::from_parameter(g.name()), &g, |b, g| {
            b.iter(|| horizontal_lift(g, &control, &g.zero(), black_box(256), 1e-12).unwrap())
        });
    }
    group.finish();
    let h = heisenberg(1);
    let control = HorizontalControl::parabola(2, 1.0);
    c.bench_function("pansu_quotient_h1", |b| b.iter(|| pansu_quotient(&h, &control, 0.3, black_box(1e-3), 32).unwrap()));
}

fn differentiability(c: &mut Criterion) {
    let f = PDMap::planar_radius_h2();
    let xi = [0.0, 1.0, 0.0, 1.0, 0.0];
    let grid = GridSpec { radius: 0.2, counts: vec![5, 5, 3], restarts: 0, restart_radius: 0.0, seed: 0 };
    let mut group = c.benchmark_group("planar_radius");
    group.sample_size(10);
    group.bench_function("implicit_grid_75", |b| b.iter(|| implicit_function(&f, black_box(&xi), &grid, &NewtonOptions::default()).unwrap()));
    let opts = MviOptions { samples_per_bin: 500, check_samples: 200, ..MviOptions::default() };
    group.bench_function("mean_value_bins", |b| b.iter(|| mean_value_ratio(&f, black_box(&xi), &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, lifts, differentiability);
criterion_main!(benches);
