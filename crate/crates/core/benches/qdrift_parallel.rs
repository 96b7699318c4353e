//! Parallel vs single-threaded qDRIFT error estimation.
//!
//! `jobs=1` pins the pool to one worker; `jobs=auto` uses every core.
//! Building with `--no-default-features` removes rayon altogether.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hamforge::models::builtin;
use hamforge::qdrift::{estimate_errors, with_jobs, QdriftConfig};

fn bench(c: &mut Criterion) {
    let (h, g) = builtin("H2", 0).expect("builtin model");
    let frags = g.fragments();
    let cfg = QdriftConfig {
        m_samples: 40,
        k_states: 8,
        seed: 1,
        ..Default::default()
    };
    let ns = [16, 64];
    let mut group = c.benchmark_group("qdrift_estimate_errors");
    group.sample_size(10);
    for (name, jobs) in [("jobs=1", Some(1)), ("jobs=auto", None)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &jobs, |b, &jobs| {
            b.iter(|| with_jobs(jobs, || estimate_errors(&h, &frags, &cfg, &ns)).unwrap().unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
