use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pwbp::detectors::{DetectorConfig, DetectorKind};
use pwbp::modem::Modulation;
use pwbp::simharness::{run_point, Execution, SweepConfig};

/// A fixed frame budget so both runners do identical work.
fn budget(kind: DetectorKind) -> SweepConfig {
    SweepConfig {
        detector: DetectorConfig::new(kind),
        tx: 4,
        rx: 4,
        modulation: Modulation::Qpsk,
        snr_db: vec![8.0],
        min_errors: u64::MAX,
        max_frames: 2_048,
        seed: 1,
    }
}

fn sequential_vs_parallel(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_point");
    group.sample_size(10);
    for kind in [
        DetectorKind::Mmse,
        DetectorKind::Bp3,
        DetectorKind::Bp2,
        DetectorKind::Map,
    ] {
        let cfg = budget(kind);
        for (label, exec) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel { workers: 0 }),
        ] {
            group.bench_with_input(BenchmarkId::new(label, kind), &cfg, |b, cfg| {
                b.iter(|| run_point(cfg, 8.0, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sequential_vs_parallel);
criterion_main!(benches);
