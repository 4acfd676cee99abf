//! Microbenchmarks for the hot kernels: dense matmul (forward + backward),
//! exact nearest-neighbor search, Lloyd clustering, and a full model forward
//! pass on a small synthetic voting graph.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use sybilscope_core::embedder::{engineer_features, forward, ModelParams, TrainConfig};
use sybilscope_core::numcore::{Tape, Tensor};
use sybilscope_core::sybil::{kmeans_cluster, knn_search, FlatIndex};
use sybilscope_core::synth::{generate_dataset, SynthConfig};
use sybilscope_core::votegraph::build_voting_graph;

fn random_tensor(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Tensor::new(vec![rows, cols], data).unwrap()
}

fn bench_matmul(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let a = random_tensor(&mut rng, 128, 128);
    let b = random_tensor(&mut rng, 128, 128);
    c.bench_function("matmul_128x128_forward_backward", |bench| {
        bench.iter(|| {
            let mut tape = Tape::new();
            let va = tape.param(a.clone());
            let vb = tape.param(b.clone());
            let prod = tape.matmul(va, vb).unwrap();
            let loss = tape.mse(prod, va).unwrap();
            tape.backward(loss).unwrap()
        })
    });
}

fn bench_knn(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let points = random_tensor(&mut rng, 500, 32);
    let index = FlatIndex::build(points.clone(), (0..500).collect()).unwrap();
    c.bench_function("knn_500x32_k10", |bench| {
        bench.iter(|| knn_search(&index, &points, 10).unwrap())
    });
}

fn bench_kmeans(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let points = random_tensor(&mut rng, 500, 16);
    c.bench_function("kmeans_500x16_k10", |bench| {
        bench.iter(|| kmeans_cluster(&points, 10, 20, 7).unwrap())
    });
}

fn bench_model_forward(c: &mut Criterion) {
    let synth = SynthConfig {
        honest_voters: 90,
        sybil_entities: 2,
        wallets_per_sybil: (3, 5),
        proposals: 30,
        votes_per_voter: (4, 8),
        behavior_noise: 0.05,
        known_fraction: 0.3,
        seed: 4,
    };
    let dataset = generate_dataset(&synth).unwrap();
    let graph = build_voting_graph(&dataset.votes, &dataset.registry).unwrap();
    let config = TrainConfig {
        embedding_dim: 16,
        hidden: 32,
        seq_len: 8,
        heads: 2,
        ..TrainConfig::default()
    };
    let features = engineer_features(&graph, &config).unwrap();
    let params = ModelParams::init(&config);
    c.bench_function("model_forward_100_voters", |bench| {
        bench.iter(|| forward(&params, &features).unwrap())
    });
}

fn configured() -> Criterion {
    Criterion::default().sample_size(10)
}

criterion_group! {
    name = kernels;
    config = configured();
    targets = bench_matmul, bench_knn, bench_kmeans, bench_model_forward
}
criterion_main!(kernels);
