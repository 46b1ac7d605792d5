use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tfmd_core::analysis::{curve_export, default_grid, lambert_w0, tfl_vanishing_threshold, CurveSpec};

fn analysis(c: &mut Criterion) {
    c.bench_function("lambert_w0", |b| b.iter(|| lambert_w0(black_box(3.7)).unwrap()));
    c.bench_function("tfl_vanishing_threshold", |b| {
        b.iter(|| tfl_vanishing_threshold(black_box(2.0), black_box(2.0)).unwrap())
    });
    let grid = default_grid();
    let spec = CurveSpec::tailed(2.0, 2.0);
    c.bench_function("tfl_curve_512", |b| b.iter(|| curve_export(&spec, black_box(&grid)).unwrap()));
}

criterion_group!(benches, analysis);
criterion_main!(benches);
