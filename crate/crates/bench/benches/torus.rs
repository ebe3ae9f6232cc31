use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gnt_bench::{t2, t3};
use gnt_core::fiber::haar_rule;
use gnt_core::torus_lab::checks::{extrinsic_curvature, main_theorem, walczak};
use gnt_core::torus_lab::geometry::sample_geometry;
use gnt_core::{Group, Matrix, MultiIndex};
use std::hint::black_box;

fn geometry(c: &mut Criterion) {
    let mut g = c.benchmark_group("geometry");
    for m in [32, 64] {
        g.bench_with_input(BenchmarkId::new("t3_build", m), &m, |b, &m| b.iter(|| t3(black_box(m))));
    }
    let geom = t3(16);
    let id = Matrix::identity(2);
    g.bench_function("t3_sample_node", |b| b.iter(|| sample_geometry(&geom, black_box(123), &id).unwrap()));
    g.finish();
}

fn integrals(c: &mut Criterion) {
    let mut g = c.benchmark_group("integrals");
    g.sample_size(10);
    let o1 = haar_rule(Group::O, 1, 1, None).unwrap();
    for m in [64, 256] {
        let geom = t2(m);
        g.bench_with_input(BenchmarkId::new("t2_main_u2", m), &geom, |b, geom| {
            b.iter(|| main_theorem(geom, &o1, &MultiIndex::new(vec![2]), 0.0).unwrap())
        });
    }
    let so2 = haar_rule(Group::SO, 2, 8, None).unwrap();
    let geom = t3(16);
    g.bench_function("t3_curvature_u20_m16", |b| {
        b.iter(|| extrinsic_curvature(&geom, &so2, &MultiIndex::new(vec![2, 0])).unwrap())
    });
    g.bench_function("t3_walczak_m16", |b| b.iter(|| walczak(&geom, &Matrix::identity(2)).unwrap()));
    g.finish();
}

criterion_group!(benches, geometry, integrals);
criterion_main!(benches);
