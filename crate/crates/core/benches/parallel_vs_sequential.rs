use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use grunbaum_core::core1d::random::random_suite;
use grunbaum_core::core1d::ConcavityClass;
use grunbaum_core::nd::cloud::uniform_simplex;
use grunbaum_core::nd::depth::{tukey_depth, DepthConfig};
use grunbaum_core::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn depth(c: &mut Criterion) {
    let cloud = uniform_simplex(2, 100_000, 1, Exec::Parallel).expect("cloud");
    let centroid = [1.0 / 3.0, 1.0 / 3.0];
    let mut group = c.benchmark_group("tukey_depth");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = DepthConfig {
            directions: 360,
            exec,
            ..DepthConfig::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| tukey_depth(&cloud, black_box(&centroid), &cfg).expect("depth"))
        });
    }
    group.finish();
}

fn suite(c: &mut Criterion) {
    let cls = ConcavityClass::PositiveN { n: 2.0 };
    let mut group = c.benchmark_group("random_suite");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| random_suite(&cls, black_box(32), 7, exec).expect("suite"))
        });
    }
    group.finish();
}

criterion_group!(benches, depth, suite);
criterion_main!(benches);
