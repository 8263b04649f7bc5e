use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use risim_core::rng::stream;
use risim_core::schemes::Designer;
use risim_core::sysmodel::generate_channel;
use risim_core::{run_ber_sweep, SchemeId, SweepConfig, SystemConfig};

fn design_benchmark(c: &mut Criterion) {
    let cfg = SystemConfig::new(7, 3, 2, 8).unwrap();
    let ch = generate_channel(&cfg, &mut stream(1, "channel", 0));
    let mut group = c.benchmark_group("design N=7 L=8");
    for id in [
        SchemeId::Proposed,
        SchemeId::SchemeA,
        SchemeId::SchemeB,
        SchemeId::SchemeC,
    ] {
        group.bench_function(id.tag(), |b| {
            b.iter(|| {
                id.design(black_box(&ch), &cfg, &mut stream(1, "design", 0))
                    .unwrap()
            })
        });
    }
    group.finish();

    let big = SystemConfig::new(12, 4, 2, 16).unwrap();
    let ch = generate_channel(&big, &mut stream(1, "channel", 0));
    c.bench_function("proposed N=12 L=16", |b| {
        b.iter(|| {
            SchemeId::Proposed
                .design(black_box(&ch), &big, &mut stream(1, "design", 0))
                .unwrap()
        })
    });
}

fn sweep_benchmark(c: &mut Criterion) {
    let cfg = SystemConfig::new(4, 3, 2, 4).unwrap();
    let sweep = SweepConfig::new(vec![0.0, 5.0, 10.0], 10_000);
    c.bench_function("ber sweep 10k trials x 3 SNR", |b| {
        b.iter(|| run_ber_sweep(&cfg, &SchemeId::Proposed, black_box(&sweep)).unwrap())
    });
}

criterion_group!(benches, design_benchmark, sweep_benchmark);
criterion_main!(benches);
