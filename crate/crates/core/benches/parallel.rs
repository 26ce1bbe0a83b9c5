use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gep_tsa::aggregation::build_aggregated;
use gep_tsa::clustering::{dp_segmentation, ChronoPartition, FeatureMatrix};
use gep_tsa::instance::{generate_instance, GenConfig};
use gep_tsa::model::{build_full, ModelKind};
use gep_tsa::par::Execution;
use gep_tsa::solve::{enumerate_binaries, solve_mip, BnbOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn instance(g: usize, n: usize, t: usize) -> gep_tsa::instance::GepInstance {
    let mut cfg = GenConfig::new(g, n, t, 7);
    cfg.demand_scale = 0.2;
    generate_instance(&cfg).unwrap()
}

fn enumeration(c: &mut Criterion) {
    let inst = instance(3, 3, 24);
    let prob = build_full(&inst, ModelKind::Milp).unwrap();
    let mut group = c.benchmark_group("enumerate_binaries");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| enumerate_binaries(&prob, exec.effective()).unwrap())
        });
    }
    group.finish();
}

fn branch_and_bound(c: &mut Criterion) {
    let inst = instance(6, 4, 240);
    let part = ChronoPartition::from_sizes(&[24; 10]).unwrap();
    let prob = build_aggregated(&inst, &part, ModelKind::Miqp).unwrap();
    let mut group = c.benchmark_group("solve_mip");
    group.sample_size(10);
    for (name, exec) in MODES {
        let opts = BnbOptions {
            execution: exec.effective(),
            ..BnbOptions::default()
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| solve_mip(&prob, &opts).unwrap()));
    }
    group.finish();
}

fn segmentation(c: &mut Criterion) {
    let inst = instance(10, 10, 2000);
    let features = FeatureMatrix::from_instance(&inst, true);
    let mut group = c.benchmark_group("dp_segmentation");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| dp_segmentation(&features, 50, exec.effective()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, enumeration, branch_and_bound, segmentation);
criterion_main!(benches);
