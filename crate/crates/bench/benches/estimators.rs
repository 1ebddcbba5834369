use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use hyperstar::rng;
use hyperstar::spreading::{mc_mle, pattern_likelihoods, simulate_spread, TransientOptions};
use hyperstar::{hyper_estimate, ExitRule, Generator, HypertreeStar, OverlapMode, SourceEstimate};

fn patterns(generator: Generator, mode: OverlapMode, n: usize) -> Vec<HypertreeStar> {
    let mut r = rng::seeded(7);
    (0..n).map(|_| generator.generate(&mut r, mode)).collect()
}

fn closed_form(c: &mut Criterion) {
    let ps = patterns(Generator::Unconstrained, OverlapMode::Multiple, 256);
    c.bench_function("hyper_estimate/unconstrained", |b| {
        b.iter(|| {
            for p in &ps {
                black_box(hyper_estimate(black_box(p), 0.125).unwrap());
            }
        })
    });
}

fn likelihoods(c: &mut Criterion) {
    let mut g = c.benchmark_group("pattern_likelihoods");
    g.sample_size(10);
    for generator in [Generator::Typical, Generator::Unconstrained] {
        let p = &patterns(generator, OverlapMode::Multiple, 1)[0];
        g.bench_with_input(BenchmarkId::from_parameter(generator), p, |b, p| {
            b.iter(|| pattern_likelihoods(p, ExitRule::Unit, TransientOptions::default()))
        });
    }
    g.finish();
}

fn spread(c: &mut Criterion) {
    let structure = HypertreeStar::from_overlaps(vec![vec![1; 50], vec![2; 50], vec![3; 50], vec![6; 50]]).unwrap();
    let mut r = rng::seeded(3);
    c.bench_function("simulate_spread/n=100", |b| {
        b.iter(|| simulate_spread(&structure, SourceEstimate::HUB, 100, &mut r).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let p = HypertreeStar::from_overlaps(vec![vec![1, 2, 1, 3], vec![2, 2], vec![1, 3]]).unwrap();
    let mut g = c.benchmark_group("mc_mle");
    g.sample_size(10);
    g.bench_function("small/1e4", |b| {
        b.iter_batched(|| 11u64, |seed| mc_mle(&p, 10_000, seed, ExitRule::Unit).unwrap(), BatchSize::SmallInput)
    });
    g.finish();
}

criterion_group!(benches, closed_form, likelihoods, spread, monte_carlo);
criterion_main!(benches);
