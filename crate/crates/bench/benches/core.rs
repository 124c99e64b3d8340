use std::hint::black_box;

use avs_bench::{matrix, noise, raster_pair, record_pool};
use avs_core::audio::log_mel;
use avs_core::cavp::{info_nce, mine_sets, partition_anchors, MiningConfig};
use avs_core::fusion::{cross_attend, Activation, AudioEmbedding, FeatureMap};
use avs_core::metrics::tally;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_info_nce(c: &mut Criterion) {
    let mut g = c.benchmark_group("info_nce");
    for n in [16usize, 128] {
        let a = matrix(1, 64, 1).row(0).to_owned();
        let p = matrix(n / 2, 64, 2);
        let neg = matrix(n / 2, 64, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| info_nce(a.view(), p.view(), neg.view(), 0.1).unwrap())
        });
    }
    g.finish();
}

fn bench_mining(c: &mut Criterion) {
    let records = record_pool(2048, 8, 4);
    let cfg = MiningConfig::default();
    c.bench_function("partition_2048", |b| b.iter(|| partition_anchors(black_box(&records), &cfg)));
    let part = partition_anchors(&records, &cfg);
    let anchor = part.foreground[0];
    c.bench_function("mine_sets_2048", |b| b.iter(|| mine_sets(black_box(anchor), &records, &part, &cfg).unwrap()));
}

fn bench_tally(c: &mut Criterion) {
    let (pred, gt) = raster_pair(224, 224, 24, 5);
    c.bench_function("tally_224x224", |b| b.iter(|| tally(black_box(&pred), &gt, 24).unwrap()));
}

fn bench_log_mel(c: &mut Criterion) {
    let w = noise(3.0, 6);
    c.bench_function("log_mel_3s", |b| b.iter(|| log_mel(black_box(&w), 3).unwrap()));
}

fn bench_fusion(c: &mut Criterion) {
    let v = FeatureMap::new(28, 28, matrix(784, 64, 7)).unwrap();
    let a = AudioEmbedding::new(matrix(1, 64, 8));
    c.bench_function("cross_attend_28x28x64", |b| b.iter(|| cross_attend(black_box(&v), &a, Activation::Sigmoid).unwrap()));
}

criterion_group!(benches, bench_info_nce, bench_mining, bench_tally, bench_log_mel, bench_fusion);
criterion_main!(benches);
