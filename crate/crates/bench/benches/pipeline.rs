use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mensura_bench::cherry_log_problem;
use mensura_core::pi::{nullspace_basis, pi_basis, RationalMatrix, VariableSpec};
use mensura_core::propagate::{variance_grid, CrossTerm, ErrorModel, GridAxis};
use mensura_core::regress::{ellipsoid_test, f_quantile, ols};

fn regression(c: &mut Criterion) {
    let (x, y) = cherry_log_problem();
    c.bench_function("ols cherry", |b| b.iter(|| ols(black_box(&x), black_box(&y)).unwrap()));
    let fit = ols(&x, &y).unwrap();
    c.bench_function("ellipsoid test", |b| {
        b.iter(|| ellipsoid_test(black_box(&fit), &[0.302f64.ln(), 2.0, 1.0], 0.999).unwrap())
    });
    c.bench_function("f quantile 0.999 (3, 28)", |b| b.iter(|| f_quantile(black_box(0.999), 3, 28).unwrap()));
}

fn pi_theorem(c: &mut Criterion) {
    let m = RationalMatrix::from_i64_rows(&[
        vec![1, 1, 1, 0, 0, 2, -1],
        vec![0, 1, 0, 1, 0, 1, 0],
        vec![-2, 0, -1, 0, 1, 0, 3],
    ]);
    c.bench_function("nullspace 3x7", |b| b.iter(|| nullspace_basis(black_box(&m))));
    let vars: Vec<VariableSpec> = ["F:M*L*T^-2", "m:M", "x:L", "t:T", "v:L*T^-1", "rho:M*L^-3"]
        .iter()
        .map(|s| VariableSpec::parse(s).unwrap())
        .collect();
    c.bench_function("pi basis 6 vars", |b| b.iter(|| pi_basis(black_box(&vars)).unwrap()));
}

fn propagation(c: &mut Criterion) {
    let em = ErrorModel::default();
    let d = GridAxis::new(0.6, 1.8, 101).unwrap();
    let h = GridAxis::new(60.0, 90.0, 101).unwrap();
    c.bench_function("variance grid 101x101", |b| {
        b.iter(|| variance_grid(0.302, black_box(d), black_box(h), &em, CrossTerm::AsPrinted).unwrap())
    });
}

criterion_group!(benches, regression, pi_theorem, propagation);
criterion_main!(benches);
