use criterion::{black_box, criterion_group, criterion_main, Criterion};
use heptad::exactfield::{Field, RootChoice};
use heptad::heptagon::{adjoint_formula, adjoint_nullspace, random_rational_heptagon};
use heptad::klein::{base_heptagon, base_points, build_context};
use heptad::tautring::scorza_cycle_product;
use heptad::walkgraph::IncidenceGraph;

fn tower(c: &mut Criterion) {
    let ctx = build_context(RootChoice::MostReal).unwrap();
    let x = ctx.alpha.add(&ctx.b).add(&ctx.zeta);
    let y = ctx.alpha.mul(&ctx.alpha).sub(&ctx.zeta);
    c.bench_function("tower multiply", |b| b.iter(|| black_box(&x).mul(black_box(&y))));
    c.bench_function("tower inverse", |b| b.iter(|| black_box(&x).inv().unwrap()));

    let (points, _) = base_points(&ctx).unwrap();
    let (base, _) = base_heptagon(&ctx, &points).unwrap();
    c.bench_function("adjoint formula, Klein base heptagon", |b| b.iter(|| adjoint_formula(black_box(&base.heptagon))));
}

fn rational(c: &mut Criterion) {
    let h = random_rational_heptagon(1, 20);
    c.bench_function("adjoint formula, rational", |b| b.iter(|| adjoint_formula(black_box(&h))));
    c.bench_function("adjoint nullspace, rational", |b| b.iter(|| adjoint_nullspace(black_box(&h)).unwrap()));
}

fn ring(c: &mut Criterion) {
    c.bench_function("Scorza cycle n = 7", |b| b.iter(|| scorza_cycle_product(black_box(7), 3).unwrap()));
    let g = IncidenceGraph::new();
    c.bench_function("closed walks k = 7", |b| b.iter(|| g.closed_walks(black_box(7))));
}

criterion_group!(benches, tower, rational, ring);
criterion_main!(benches);
