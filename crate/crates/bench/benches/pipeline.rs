use criterion::{criterion_group, criterion_main, Criterion};
use dirac_spectral::bloch::{eigenvalues_near_lattice, lattice_point, CharacteristicFn};
use dirac_spectral::contour::{self, ComplexMap};
use dirac_spectral::monodromy::integrate_fundamental;
use dirac_spectral::spectrality::series_bound_lemma1;
use dirac_spectral::C64;
use dirac_spectral_bench::perturbed_potential;
use std::hint::black_box;

fn bench_monodromy(c: &mut Criterion) {
    let q = perturbed_potential();
    let mut group = c.benchmark_group("monodromy");
    for lambda in [C64::new(5.0, 0.5), C64::new(40.0, 1.0)] {
        group.bench_function(format!("integrate_lambda_{}", lambda.re), |b| {
            b.iter(|| integrate_fundamental(&q, black_box(lambda), 1e-10).unwrap())
        });
    }
    group.finish();
}

fn bench_newton(c: &mut Criterion) {
    let q = perturbed_potential();
    let b = q.mean_b();
    let map = CharacteristicFn::new(&q, 0.3, 1e-10);
    c.bench_function("newton_from_lattice_n10", |bch| {
        bch.iter(|| {
            contour::newton(&map, black_box(lattice_point(10, 2, 0.3, b)), 1, &map.root_options())
                .unwrap()
        })
    });
}

fn bench_winding(c: &mut Criterion) {
    let q = perturbed_potential();
    let b = q.mean_b();
    let map = CharacteristicFn::new(&q, 0.3, 1e-10);
    let center = lattice_point(3, 2, 0.3, b);
    c.bench_function("winding_unit_circle", |bch| {
        bch.iter(|| {
            contour::winding_number(&map, &|s| contour::circle_point(center, 1.0, s), 32).unwrap()
        })
    });
    let _ = map.eval(center).unwrap();
}

fn bench_lattice_scan(c: &mut Criterion) {
    let q = perturbed_potential();
    let mut group = c.benchmark_group("lattice_scan");
    group.sample_size(10);
    group.bench_function("n_-5_to_5", |bch| {
        bch.iter(|| eigenvalues_near_lattice(&q, black_box(0.4), -5, 5, 1e-10).unwrap())
    });
    group.finish();
}

fn bench_series(c: &mut Criterion) {
    c.bench_function("series_bound_1e5_terms", |bch| {
        bch.iter(|| series_bound_lemma1(black_box(0.7), 100_000))
    });
}

criterion_group!(
    benches,
    bench_monodromy,
    bench_newton,
    bench_winding,
    bench_lattice_scan,
    bench_series
);
criterion_main!(benches);
