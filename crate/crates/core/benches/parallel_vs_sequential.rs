use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stopwise::sim::{exact_curve_with, simulate_with, SimConfig};
use stopwise::{Execution, QualityModel};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn quadrature(c: &mut Criterion) {
    let model = QualityModel::normal();
    let mut group = c.benchmark_group("mu_sequence_normal_2000");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| model.mu_sequence_with(black_box(2000), exec).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let model = QualityModel::exponential();
    let cfg = SimConfig::new(1000, 368, 400_000, 1).with_workers(8);
    let mut group = c.benchmark_group("simulate_exponential_1000");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate_with(&model, black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let values: Vec<f64> = (0..9).map(|i| f64::from(i % 4)).collect();
    let mut group = c.benchmark_group("exact_curve_9");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exact_curve_with(black_box(&values), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, quadrature, monte_carlo, enumeration);
criterion_main!(benches);
