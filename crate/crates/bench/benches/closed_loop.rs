use aiofl_core::{preset, Integrator};
use criterion::{criterion_group, criterion_main, Criterion};

fn runs(c: &mut Criterion) {
    let mut g = c.benchmark_group("closed_loop_1s");
    g.sample_size(20);
    for name in ["s1-leso", "s1-inleso", "s3-leso"] {
        let mut cfg = preset(name).unwrap();
        cfg.scenario.tf = 1.0;
        g.bench_function(name, |b| b.iter(|| cfg.run().unwrap()));
    }
    let mut cfg = preset("s1-inleso").unwrap();
    cfg.scenario.tf = 1.0;
    cfg.scenario.integrator = Integrator::Rk45 { rtol: 1e-8, atol: 1e-10 };
    g.bench_function("s1-inleso-rk45", |b| b.iter(|| cfg.run().unwrap()));
    g.finish();
}

criterion_group!(benches, runs);
criterion_main!(benches);
