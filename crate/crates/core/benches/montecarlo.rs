use criterion::{criterion_group, criterion_main, Criterion};

use eiv_h2::montecarlo::{run_montecarlo, Execution, ExperimentConfig};

fn config() -> ExperimentConfig {
    ExperimentConfig {
        n_list: vec![25, 100],
        repetitions: 4,
        verify_samples: 20,
        ..Default::default()
    }
}

fn bench(c: &mut Criterion) {
    let cfg = config();
    let mut group = c.benchmark_group("montecarlo");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| run_montecarlo(&cfg, Execution::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_montecarlo(&cfg, Execution::Parallel { jobs: None }).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
