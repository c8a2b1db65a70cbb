use std::hint::black_box;

use aiofl_core::plant::PlantState;
use aiofl_core::tuner::{ga_optimize, GaConfig, SearchSpace};
use aiofl_core::{check_relative_degree, fal, lyapunov_validate, preset, slfjm_default_params, Eso, RunRecord, Sample};
use criterion::{criterion_group, criterion_main, Criterion};

fn plant_and_observer(c: &mut Criterion) {
    let p = slfjm_default_params();
    c.bench_function("plant_derivative", |b| {
        b.iter(|| p.derivative(black_box(&[0.1, 0.2, -0.3, 0.4]), black_box(1.5), 0.0))
    });
    let eso = Eso::new(preset("s1-inleso").unwrap().observer).unwrap();
    let xi = [0.1, 0.2, 0.3, 0.4, 0.5];
    let mut out = [0.0; 5];
    c.bench_function("inleso_derivative", |b| {
        b.iter(|| eso.derivative_into(black_box(&xi), black_box(0.3), black_box(1.0), &mut out))
    });
    c.bench_function("fal", |b| b.iter(|| fal(black_box(3.7), 0.3804, 16.6108)));
}

fn analysis(c: &mut Criterion) {
    let p = slfjm_default_params();
    let samples: Vec<PlantState> = (0..100)
        .map(|i| {
            let s = i as f64 / 50.0 - 1.0;
            PlantState([s, -s * 0.5, s * s, 0.3 - s])
        })
        .collect();
    c.bench_function("relative_degree_100", |b| b.iter(|| check_relative_degree(&p, black_box(&samples), 1e-6)));
    c.bench_function("lyapunov_validate", |b| {
        b.iter(|| lyapunov_validate(black_box(&[5.0, 10.0, 10.0, 5.0, 1.0]), 50.0, 1.0))
    });
    let rec = RunRecord {
        samples: (0..=20_000)
            .map(|k| {
                let t = k as f64 * 1e-3;
                Sample { t, y: t.sin(), u: t.cos(), ..Sample::default() }
            })
            .collect(),
    };
    let w = aiofl_core::OpiWeights::reference(20.0);
    c.bench_function("metrics_20s", |b| b.iter(|| aiofl_core::metrics::evaluate(black_box(&rec), &w)));
}

fn tuner(c: &mut Criterion) {
    let space = SearchSpace::uniform(5, -5.0, 5.0);
    let cfg = GaConfig { budget: 1000, seed: 1, ..GaConfig::default() };
    c.bench_function("ga_sphere_1000", |b| {
        b.iter(|| ga_optimize(|x: &[f64]| x.iter().map(|v| v * v).sum(), &space, &cfg))
    });
}

criterion_group!(benches, plant_and_observer, analysis, tuner);
criterion_main!(benches);
