//! Hot paths ordered roughly by call volume in a deficit evaluation:
//! scalar kernels, rule construction, integration, spectral projection,
//! evolved jets, and the full deficit and fit pipelines.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use isodef_core::deficit::deficit;
use isodef_core::hermite::project;
use isodef_core::semigroup::{pt_jet, SemigroupState};
use isodef_core::{fit_phi_affine, gauss_hermite_rule, integrate, mc_rule_antithetic, sets, zoo};
use std::hint::black_box;
use std::time::Duration;

fn configured() -> Criterion {
    Criterion::default()
        .sample_size(20)
        .measurement_time(Duration::from_secs(2))
        .warm_up_time(Duration::from_millis(300))
}

fn scalar_kernels(c: &mut Criterion) {
    c.bench_function("normal_cdf", |b| {
        b.iter(|| isodef_core::scalar::Phi(black_box(0.7)))
    });
    c.bench_function("normal_quantile", |b| {
        b.iter(|| isodef_core::scalar::Phi_inv(black_box(0.3)).unwrap())
    });
    c.bench_function("isoperimetric_profile", |b| {
        b.iter(|| isodef_core::scalar::iso_I(black_box(0.3)).unwrap())
    });
    c.bench_function("bivariate_cdf", |b| {
        b.iter(|| sets::bivariate_phi(black_box(0.4), black_box(-0.2), black_box(0.6)))
    });
}

fn rules_and_integration(c: &mut Criterion) {
    c.bench_function("gh_rule_60x60", |b| {
        b.iter(|| gauss_hermite_rule(2, black_box(60)).unwrap())
    });
    let rule = gauss_hermite_rule(2, 60).unwrap();
    c.bench_function("integrate_gh_60x60", |b| {
        b.iter(|| integrate(&rule, |x: &[f64]| (x[0] * x[1]).exp()).unwrap())
    });
    let mc = mc_rule_antithetic(2, 1 << 16, 9);
    c.bench_function("integrate_mc_64k", |b| {
        b.iter(|| integrate(&mc, |x: &[f64]| (x[0] * x[1]).exp()).unwrap())
    });
}

fn spectral_projection(c: &mut Criterion) {
    let rule = gauss_hermite_rule(2, 40).unwrap();
    let f = zoo::phi_affine("bench", vec![1.0, -0.5], 0.2);
    c.bench_function("project_degree_8", |b| {
        b.iter(|| project(|x: &[f64]| f.value(x), 2, 8, &rule).unwrap())
    });
}

fn evolved_jets(c: &mut Criterion) {
    let state = SemigroupState::new(1);
    let wedge = sets::wedge(0.6).unwrap().indicator();
    c.bench_function("jet_closed_form_wedge", |b| {
        b.iter(|| pt_jet(&state, &wedge, black_box(0.2), &[0.3, -0.4]).unwrap())
    });
    let poly = zoo::functions()
        .unwrap()
        .into_iter()
        .find(|f| f.name == "poly-2")
        .unwrap();
    c.bench_function("jet_quadrature_poly", |b| {
        b.iter(|| pt_jet(&state, &poly, black_box(0.2), &[0.3, -0.4]).unwrap())
    });
}

fn pipelines(c: &mut Criterion) {
    let f = zoo::phi_affine("bench", vec![1.0, -0.5], 0.2);
    let rule = gauss_hermite_rule(2, 40).unwrap();
    c.bench_function("deficit_gh_40x40", |b| {
        b.iter(|| deficit(&f, &rule).unwrap())
    });
    let target = sets::wedge(0.5).unwrap().smoothed_indicator(0.1).unwrap();
    let fit_rule = gauss_hermite_rule(2, 30).unwrap();
    c.bench_function("fit_phi_affine_gh_30x30", |b| {
        b.iter_batched(
            || (target.clone(), fit_rule.clone()),
            |(f, r)| fit_phi_affine(&f, &r, 2).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group! {
    name = benches;
    config = configured();
    targets = scalar_kernels, rules_and_integration, spectral_projection, evolved_jets, pipelines
}
criterion_main!(benches);
