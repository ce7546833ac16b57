use std::hint::black_box;

use carnot::bch::{bch_term, decompose_cn_free, group_product, series_oracle_product};
use carnot::catalog::{abelian, complexified_heisenberg, example_g42, free_nilpotent, heisenberg};
use carnot::empirical::{random_cube, random_rational_vector, rng};
use carnot::subgroups::{classify_epimorphism, GradedMorphism, SearchOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn products(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_product");
    for g in [heisenberg(2), complexified_heisenberg(), example_g42(), free_nilpotent(2, 3).unwrap()] {
        let mut r = rng(1);
        let x = random_rational_vector(&mut r, g.dim(), 9, 7);
        let y = random_rational_vector(&mut r, g.dim(), 9, 7);
        group.bench_with_input(BenchmarkId::new("closed_form", g.name()), &g, |b, g| b.iter(|| group_product(g, black_box(&x), black_box(&y))));
        group.bench_with_input(BenchmarkId::new("series", g.name()), &g, |b, g| b.iter(|| series_oracle_product(g, black_box(&x), black_box(&y))));
    }
    group.finish();

    let mut group = c.benchmark_group("float_product");
    for g in [heisenberg(2), free_nilpotent(2, 4).unwrap()] {
        let mut r = rng(2);
        let x = random_cube(&mut r, g.dim());
        let y = random_cube(&mut r, g.dim());
        group.bench_with_input(BenchmarkId::from_parameter(g.name()), &g, |b, g| b.iter(|| group_product(g, black_box(&x), black_box(&y))));
    }
    group.finish();
}

fn terms(c: &mut Criterion) {
    let f = free_nilpotent(2, 4).unwrap();
    let mut r = rng(3);
    let x = random_rational_vector(&mut r, f.dim(), 5, 3);
    let y = random_rational_vector(&mut r, f.dim(), 5, 3);
    c.bench_function("bch_term_4_free_2_4", |b| b.iter(|| bch_term(&f, 4, black_box(&x), black_box(&y)).unwrap()));
    c.bench_function("decompose_c4", |b| b.iter(|| decompose_cn_free(black_box(4))));
}

fn classification(c: &mut Criterion) {
    let g = example_g42();
    let l1 = GradedMorphism::coordinate_projection(g.clone(), abelian(2), &[0, 1]).unwrap();
    let l2 = GradedMorphism::coordinate_projection(g, abelian(2), &[2, 3]).unwrap();
    let opts = SearchOptions::default();
    c.bench_function("classify_epi_g42_witness", |b| b.iter(|| classify_epimorphism(black_box(&l1), &opts).unwrap()));
    c.bench_function("classify_epi_g42_certificate", |b| b.iter(|| classify_epimorphism(black_box(&l2), &opts).unwrap()));
}

criterion_group!(benches, products, terms, classification);
criterion_main!(benches);
