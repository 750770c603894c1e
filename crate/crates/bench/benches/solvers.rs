use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use perfband::fem::{assemble, solve_lowest, EigenOptions};
use perfband::geometry::{build_perforated_mesh, HoleShape, MeshOptions, PerforatedCell};
use perfband::linalg::Cholesky;

fn cell() -> PerforatedCell {
    PerforatedCell::new(0.3, 8, HoleShape::canonical(0.3)).unwrap()
}

fn mesher(c: &mut Criterion) {
    let cell = cell();
    c.bench_function("mesh N=8 h=0.02", |b| {
        b.iter(|| build_perforated_mesh(black_box(&cell), MeshOptions::new(0.02)).unwrap())
    });
}

fn cholesky(c: &mut Criterion) {
    let mesh = build_perforated_mesh(&cell(), MeshOptions::new(0.02)).unwrap();
    let a = assemble(&mesh, 1.0).unwrap().energy_matrix();
    c.bench_function("factor K+M", |b| b.iter(|| Cholesky::factor(black_box(&a)).unwrap()));
    let chol = Cholesky::factor(&a).unwrap();
    let rhs = vec![Complex64::new(1.0, 0.0); chol.n()];
    c.bench_function("solve K+M", |b| b.iter(|| chol.solve(black_box(&rhs))));
}

fn eigensolve(c: &mut Criterion) {
    let mesh = build_perforated_mesh(&cell(), MeshOptions::new(0.02)).unwrap();
    let pair = assemble(&mesh, 1.0).unwrap();
    let mut g = c.benchmark_group("eigen");
    g.sample_size(10);
    g.bench_function("lowest 3", |b| {
        b.iter(|| solve_lowest(black_box(&pair), 3, EigenOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, mesher, cholesky, eigensolve);
criterion_main!(benches);
