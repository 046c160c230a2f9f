use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spectral_flow::apsindex::{aps_index, SuspensionProblem};
use spectral_flow::engines::{sf_crossing, sf_integral, CrossingOptions, IntegralOptions};
use spectral_flow::exec::Execution;
use spectral_flow::generators;
use spectral_flow::geometry::{signature_path, CircleMetricPath, MetricMode, TimeProfile, Trig};
use spectral_flow::quadrature::QuadOptions;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn engines(c: &mut Criterion) {
    let path = generators::random_invertible_path(7, 16).unwrap();
    let mut group = c.benchmark_group("random_path_16");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("crossing", name), &exec, |b, &exec| {
            b.iter(|| sf_crossing(&path, CrossingOptions { exec, ..Default::default() }).unwrap())
        });
        let opts = IntegralOptions { quad: QuadOptions { exec, ..Default::default() } };
        group.bench_with_input(BenchmarkId::new("integral_s2", name), &opts, |b, &opts| {
            b.iter(|| sf_integral(&path, 2.0, opts).unwrap())
        });
    }
    group.finish();
}

fn suspension(c: &mut Criterion) {
    let path = generators::random_flat_path(3, 8).unwrap();
    let mut group = c.benchmark_group("aps_index_m200");
    group.sample_size(10);
    for (name, exec) in MODES {
        let prob = SuspensionProblem::new(path.clone(), 200).with_exec(exec);
        group.bench_function(name, |b| b.iter(|| aps_index(&prob).unwrap()));
    }
    group.finish();
}

fn signature(c: &mut Criterion) {
    let metric = CircleMetricPath::new(
        16,
        1.0,
        vec![MetricMode { k: 1, trig: Trig::Sin, amplitude: 0.3, profile: TimeProfile::Linear }],
    )
    .unwrap();
    let mut group = c.benchmark_group("signature_path_n16");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| signature_path(&metric, 16, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, engines, suspension, signature);
criterion_main!(benches);
