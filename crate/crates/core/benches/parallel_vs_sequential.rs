use criterion::{criterion_group, criterion_main, Criterion};

use clustersift::blinding::Strategy;
use clustersift::kmeans::{kmeans_fit, KMeansConfig};
use clustersift::objective::{Evaluator, Threshold};
use clustersift::par;
use clustersift::search::{exhaustive_with, forward_backward_with, SearchConfig};
use clustersift::simgen::{gen_two_cluster_curves, monte_carlo, Design, MonteCarloConfig};

fn monte_carlo_case1(c: &mut Criterion) {
    let cfg = MonteCarloConfig::new(Design::Case1 { sigma: 0.2 }, 200, 7);
    let mut g = c.benchmark_group("monte_carlo_case1_200");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| monte_carlo(&cfg).unwrap()));
    g.bench_function("sequential", |b| {
        b.iter(|| par::sequential(|| monte_carlo(&cfg).unwrap()))
    });
    g.finish();
}

fn searches(c: &mut Criterion) {
    let sample = gen_two_cluster_curves(100, 16, 3).unwrap();
    let (model, labels) = kmeans_fit(&sample.data, &KMeansConfig::new(2, 1)).unwrap();
    let strategy = Strategy::ConditionalMean(5);
    let t = Threshold::new(0.95).unwrap();

    // a fresh evaluator per iteration, so the subset cache starts cold
    let exhaustive = SearchConfig::exhaustive(t, strategy);
    let mut g = c.benchmark_group("exhaustive_p16");
    g.sample_size(10);
    let run = || {
        let ev = Evaluator::new(&sample.data, &model, &labels, strategy).unwrap();
        exhaustive_with(&ev, &exhaustive).unwrap()
    };
    g.bench_function("parallel", |b| b.iter(run));
    g.bench_function("sequential", |b| b.iter(|| par::sequential(run)));
    g.finish();

    let fb = SearchConfig::forward_backward(t, strategy, 50, 9);
    let mut g = c.benchmark_group("forward_backward_p16");
    g.sample_size(10);
    let run = || {
        let ev = Evaluator::new(&sample.data, &model, &labels, strategy).unwrap();
        forward_backward_with(&ev, &fb).unwrap()
    };
    g.bench_function("parallel", |b| b.iter(run));
    g.bench_function("sequential", |b| b.iter(|| par::sequential(run)));
    g.finish();
}

criterion_group!(benches, monte_carlo_case1, searches);
criterion_main!(benches);
