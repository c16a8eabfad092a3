use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use covert_core::channel::{estimate_error_probability, Decoder};
use covert_core::codebook::generate_bpsk_codebook;
use covert_core::covertness::estimate_divergences;
use covert_core::deviation::empirical_tail_probability;
use covert_core::mc::{Execution, McRun};
use covert_core::params::ChannelParams;
use covert_core::rng::Seed;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn error_probability(c: &mut Criterion) {
    let channel = ChannelParams::new(1.0).unwrap();
    let cb = generate_bpsk_codebook(1024, 64, 4, 0.0164, Seed(1)).unwrap();
    let mut group = c.benchmark_group("error_probability");
    group.sample_size(10);
    for (name, mode) in MODES {
        let run = McRun::new(4096, 7).with_execution(mode);
        group.bench_with_input(BenchmarkId::new(name, 4096), &run, |b, run| {
            b.iter(|| estimate_error_probability(&cb, channel, run, Decoder::MaximumLikelihood).unwrap())
        });
    }
    group.finish();
}

fn divergence(c: &mut Criterion) {
    let channel = ChannelParams::new(1.0).unwrap();
    let cb = generate_bpsk_codebook(256, 32, 4, 0.05, Seed(2))
        .unwrap()
        .augment_with_zero_codewords(8)
        .unwrap();
    let mut group = c.benchmark_group("divergence");
    group.sample_size(10);
    for (name, mode) in MODES {
        let run = McRun::new(4096, 7).with_execution(mode);
        group.bench_with_input(BenchmarkId::new(name, 4096), &run, |b, run| {
            b.iter(|| estimate_divergences(&cb, channel, run).unwrap())
        });
    }
    group.finish();
}

fn tail(c: &mut Criterion) {
    let channel = ChannelParams::new(1.0).unwrap();
    let mut group = c.benchmark_group("tail_probability");
    group.sample_size(10);
    for (name, mode) in MODES {
        let run = McRun::new(2048, 7).with_execution(mode);
        group.bench_with_input(BenchmarkId::new(name, 4096), &run, |b, run| {
            b.iter(|| empirical_tail_probability(4096, 0.0038, channel, run).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, error_probability, divergence, tail);
criterion_main!(benches);
