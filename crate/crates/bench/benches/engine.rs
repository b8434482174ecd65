//! Microbenchmarks for the hot paths: single chain steps, zig-zag event
//! generation, exact law construction, and the analysis kernels.

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use std::hint::black_box;
use zigzag_cw::chains::{lmh_step, mh_step, LatticeState, LiftedState};
use zigzag_cw::model::{exact_stationary_law, ModelParams};
use zigzag_cw::zigzag::{self, ZigZagSpec};
use zigzag_cw::{derive_stream, integrated_autocorrelation, ks_distance, EmpiricalSummary, WindowRule};

fn bench_chain_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group("chain_step");
    for &n in &[1_000u64, 100_000] {
        let params = ModelParams::new(0.8, 0.2, n).unwrap();
        group.bench_with_input(BenchmarkId::new("mh", n), &params, |b, params| {
            let mut rng = derive_stream(1, 0, "bench/mh");
            let mut state = LatticeState { k: n / 2 };
            b.iter(|| {
                state = mh_step(params, state, &mut rng);
                black_box(state.k)
            });
        });
        group.bench_with_input(BenchmarkId::new("lmh", n), &params, |b, params| {
            let mut rng = derive_stream(1, 0, "bench/lmh");
            let mut state = LiftedState { state: LatticeState { k: n / 2 }, j: 1 };
            b.iter(|| {
                state = lmh_step(params, state, &mut rng);
                black_box(state.state.k)
            });
        });
    }
    group.finish();
}

fn bench_zigzag(c: &mut Criterion) {
    let mut group = c.benchmark_group("zigzag");
    let linear = ZigZagSpec::linear(1.0, 1.0).unwrap();
    let cubic = ZigZagSpec::cubic(1.0, 1.0 / 3.0).unwrap();
    group.bench_function("simulate_linear_t1e3", |b| {
        let mut rng = derive_stream(2, 0, "bench/zz-linear");
        b.iter(|| zigzag::simulate(&linear, 0.0, 1, 1e3, u64::MAX, &mut rng).unwrap().len());
    });
    group.bench_function("simulate_cubic_t1e3", |b| {
        let mut rng = derive_stream(2, 0, "bench/zz-cubic");
        b.iter(|| zigzag::simulate(&cubic, 0.0, 1, 1e3, u64::MAX, &mut rng).unwrap().len());
    });
    group.bench_function("occupation_cdf_t1e4", |b| {
        let mut rng = derive_stream(2, 0, "bench/zz-occ");
        let log = zigzag::simulate(&linear, 0.0, 1, 1e4, u64::MAX, &mut rng).unwrap();
        b.iter(|| black_box(log.occupation_cdf().evaluate(0.5)));
    });
    group.finish();
}

fn bench_law(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_law");
    for &n in &[1_000u64, 100_000] {
        group.bench_with_input(BenchmarkId::new("build", n), &n, |b, &n| {
            let params = ModelParams::new(0.8, 0.2, n).unwrap();
            b.iter(|| exact_stationary_law(&params).unwrap().var_eta());
        });
    }
    group.finish();
}

fn bench_analysis(c: &mut Criterion) {
    let mut group = c.benchmark_group("analysis");
    let mut rng = derive_stream(3, 0, "bench/analysis");
    let series: Vec<f64> = {
        use rand::Rng;
        let mut x = 0.0f64;
        (0..100_000)
            .map(|_| {
                x = 0.9 * x + (rng.random::<f64>() - 0.5);
                x
            })
            .collect()
    };
    group.bench_function("autocorrelation_100k", |b| {
        b.iter_batched(
            || series.clone(),
            |s| integrated_autocorrelation(&s, &WindowRule::default()).unwrap().tau,
            BatchSize::LargeInput,
        );
    });
    group.bench_function("ks_100k", |b| {
        let summary = EmpiricalSummary::from_samples(series.clone()).unwrap();
        b.iter(|| ks_distance(&summary, &|x| 1.0 / (1.0 + (-x).exp())));
    });
    group.finish();
}

criterion_group!(benches, bench_chain_steps, bench_zigzag, bench_law, bench_analysis);
criterion_main!(benches);
