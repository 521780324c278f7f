use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use kwb_bench::variants;
use kwb_core::algorithms::{kwb_step, run_trajectory};
use kwb_core::analysis::validate_assumptions;
use kwb_core::{ParamSequence, RandomStream, RunState};

fn single_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("kwb_step");
    for d in [1usize, 4, 16] {
        let fixture = variants(d, 1_000_000).remove(1);
        group.throughput(Throughput::Elements(1));
        group.bench_with_input(BenchmarkId::from_parameter(d), &fixture, |b, f| {
            let stream = RandomStream::new(1, 0);
            let mut state = RunState::new(&f.config);
            b.iter(|| {
                if state.n >= f.config.horizon {
                    state = RunState::new(&f.config);
                }
                black_box(kwb_step(&mut state, &f.config, &f.model, &f.noise, stream).unwrap());
            });
        });
    }
    group.finish();
}

fn trajectories(c: &mut Criterion) {
    let horizon = 10_000;
    let mut group = c.benchmark_group("run_trajectory");
    group.throughput(Throughput::Elements(horizon));
    for d in [1usize, 4] {
        for f in variants(d, horizon) {
            group.bench_with_input(BenchmarkId::new(f.name, d), &f, |b, f| {
                let mut rep = 0;
                b.iter(|| {
                    rep += 1;
                    black_box(run_trajectory(&f.config, &f.model, &f.noise, 7, rep).unwrap())
                });
            });
        }
    }
    group.finish();
}

fn sequences(c: &mut Criterion) {
    let step: ParamSequence = "n^-1*log3^1".parse().unwrap();
    c.bench_function("partial_sum log3 1e5", |b| b.iter(|| black_box(step.partial_sum(black_box(100_000)).unwrap())));
    let f = variants(2, 1000).remove(2);
    c.bench_function("validate averaged", |b| b.iter(|| black_box(validate_assumptions(&f.config, &f.model, &f.noise))));
}

criterion_group!(benches, single_step, trajectories, sequences);
criterion_main!(benches);
