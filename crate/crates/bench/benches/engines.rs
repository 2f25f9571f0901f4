use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use graph_dmd::dmd::{exact_dmd, graph_dmd, tdmd, SnapshotPair};
use graph_dmd::graph::{synth_sequence, SynthParams};
use graph_dmd::tt::{tt_decompose, TtOptions};
use graph_dmd::DenseTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor(dims: Vec<usize>, seed: u64) -> DenseTensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseTensor::from_fn(dims, |_| rng.random_range(-1.0..1.0)).unwrap()
}

fn bench_tt_svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("tt_decompose");
    for n in [8, 16, 24] {
        let a = random_tensor(vec![n, n, n, 20], n as u64);
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| tt_decompose(black_box(a), 1e-2).unwrap())
        });
    }
    group.finish();
}

fn bench_engines(c: &mut Criterion) {
    let mut group = c.benchmark_group("synthetic_sequence");
    group.sample_size(10);
    for d in [32, 64] {
        let (seq, _) = synth_sequence(&SynthParams::new(d, 100, 1e-2, 0)).unwrap();
        let pair = SnapshotPair::<DenseTensor<f64>>::from_sequence(&seq.to_tensor().unwrap()).unwrap();
        let unfolded = pair.unfold().unwrap();
        let opts = TtOptions::relative(1e-1);
        group.bench_with_input(BenchmarkId::new("graph_dmd", d), &seq, |b, seq| {
            b.iter(|| graph_dmd(black_box(seq), &opts).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("tdmd", d), &pair, |b, pair| {
            b.iter(|| tdmd(black_box(pair), &opts).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("exact_dmd", d), &unfolded, |b, pair| {
            b.iter(|| exact_dmd(black_box(pair), 1e-1, None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_tt_svd, bench_engines);
criterion_main!(benches);
