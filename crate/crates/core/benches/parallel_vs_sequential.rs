//! Benchmarks of the data-parallel inner loops. Built with the default
//! `parallel` feature the maps run on the rayon pool; built with
//! `--no-default-features` the same code runs sequentially. Each benchmark
//! id carries the mode, so two runs land side by side in the criterion
//! reports:
//!
//! ```text
//! cargo bench -p chaos-core
//! cargo bench -p chaos-core --no-default-features
//! ```

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use chaos_core::constants::{equivalence_ratios, ruc_average, uncond_constant, RucMode};
use chaos_core::parallel::is_parallel;
use chaos_core::sampling::{all_pairs, gaussian_coeffs, random_step, stream_rng};
use chaos_core::spaces::{marcinkiewicz_norm, NormSpec};
use chaos_core::square::{mixed_norm_chain, DyadicStep2D};
use chaos_core::walsh::analyze;

fn mode() -> &'static str {
    if is_parallel() {
        "parallel"
    } else {
        "sequential"
    }
}

fn bench_uncond_exhaustive(c: &mut Criterion) {
    let pairs = all_pairs(6); // 15 pairs -> 2^15 patterns
    let coeffs = gaussian_coeffs(&pairs, &mut stream_rng(1, 0));
    let mut group = c.benchmark_group("uncond_exhaustive_15_pairs");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("l1", mode()), &coeffs, |b, coeffs| {
        b.iter(|| uncond_constant(&NormSpec::L1, black_box(coeffs)).unwrap());
    });
    group.finish();
}

fn bench_equivalence_corpus(c: &mut Criterion) {
    let mut group = c.benchmark_group("equivalence_corpus_j8");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("l1_256_trials", mode()), |b| {
        b.iter(|| equivalence_ratios(&NormSpec::L1, 8, 256, black_box(3)).unwrap());
    });
    group.finish();
}

fn bench_ruc_exact(c: &mut Criterion) {
    let pairs = all_pairs(6);
    let coeffs = gaussian_coeffs(&pairs[..14], &mut stream_rng(2, 0));
    let mut group = c.benchmark_group("ruc_exact_14_pairs");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("l1", mode()), &coeffs, |b, coeffs| {
        b.iter(|| ruc_average(&NormSpec::L1, black_box(coeffs), RucMode::Exact, 0).unwrap());
    });
    group.finish();
}

fn bench_mixed_norm_corpus(c: &mut Criterion) {
    let squares: Vec<DyadicStep2D> = (0..16u64)
        .map(|t| {
            let mut rng = stream_rng(4, t);
            let values = (0..1usize << 12)
                .map(|_| 4.0 * (2.0 * chaos_core::sampling::unit_f64(&mut rng) - 1.0))
                .collect();
            DyadicStep2D::new(6, 6, values).unwrap()
        })
        .collect();
    let mut group = c.benchmark_group("mixed_norm_chain_level66");
    group.sample_size(10);
    group.bench_with_input(
        BenchmarkId::new("orlicz_m_16_squares", mode()),
        &squares,
        |b, squares| {
            b.iter(|| {
                for x in squares {
                    black_box(mixed_norm_chain(x, chaos_core::spaces::NFunction::ExpM).unwrap());
                }
            });
        },
    );
    group.finish();
}

fn bench_single_threaded_kernels(c: &mut Criterion) {
    // Reference kernels with no internal parallelism; their timings should
    // not move between the two builds.
    let x = random_step(14, 4.0, &mut stream_rng(5, 0));
    let mut group = c.benchmark_group("kernels");
    group.bench_with_input(
        BenchmarkId::new("walsh_transform_level14", mode()),
        &x,
        |b, x| {
            b.iter(|| analyze(black_box(x)));
        },
    );
    group.bench_with_input(
        BenchmarkId::new("marcinkiewicz_level14", mode()),
        &x,
        |b, x| {
            b.iter(|| marcinkiewicz_norm(black_box(x), 0.0).unwrap());
        },
    );
    group.finish();
}

criterion_group!(
    benches,
    bench_uncond_exhaustive,
    bench_equivalence_corpus,
    bench_ruc_exact,
    bench_mixed_norm_corpus,
    bench_single_threaded_kernels
);
criterion_main!(benches);
