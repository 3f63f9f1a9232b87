use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cs2::correlation::{estimate_correlation_with, CorrelationOptions};
use cs2::envelope::{reconstruct_power_with, welch_average_amplitude_with};
use cs2::metrics::{pipeline_with, run_sweep_with};
use cs2::whitening::deconvolve_with;
use cs2::{simulate_measurement, Execution, PhaseSource, PipelineParams, SimConfig, SweepConfig, Window};

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn stages(c: &mut Criterion) {
    let sim = simulate_measurement(&SimConfig::reference_scenario(1)).unwrap();
    let params = PipelineParams {
        sigma_w2: Some(sim.sigma_w2),
        ..PipelineParams::default()
    };
    let out = pipeline_with(Execution::Sequential, &sim.x, &params).unwrap();
    let y2 = out.deconvolved.map(|v| v * v).unwrap();

    let mut group = c.benchmark_group("stages");
    for (name, exec) in MODES {
        let options = CorrelationOptions {
            execution: exec,
            ..CorrelationOptions::default()
        };
        group.bench_with_input(BenchmarkId::new("correlation_n41", name), &exec, |b, _| {
            b.iter(|| estimate_correlation_with(black_box(&sim.x), 41, &options).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("deconvolve_n41", name), &exec, |b, &e| {
            b.iter(|| deconvolve_with(e, &out.filter, black_box(&sim.x)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("welch_l2048", name), &exec, |b, &e| {
            b.iter(|| welch_average_amplitude_with(e, black_box(&y2), 2048, 0.5, Window::Hann).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("reconstruct", name), &exec, |b, &e| {
            b.iter(|| reconstruct_power_with(e, black_box(&out.spectrum), y2.len(), PhaseSource::PerFrame).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("pipeline", name), &exec, |b, &e| {
            b.iter(|| pipeline_with(e, black_box(&sim.x), &params).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let config = SweepConfig::new(vec![-10.0, 0.0, 10.0], 8, 3);
    let mut group = c.benchmark_group("sweep_3x8");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| run_sweep_with(e, black_box(&config)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, stages, sweep);
criterion_main!(benches);
