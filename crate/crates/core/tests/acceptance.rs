//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use tempfile::tempdir;

use sybilscope_core::embedder::{
    engineer_features, reconstruction_loss, reconstruction_loss_and_gradients, ModelParams,
    TrainConfig,
};
use sybilscope_core::ingest::VoteRecord;
use sybilscope_core::numcore::{finite_diff_check, Tensor, FD_TOLERANCE};
use sybilscope_core::pipeline::{
    self, load_artifact, Artifact, PipelineConfig, CLUSTERS_FILE, REPORT_FILE, REPORT_TEXT_FILE,
};
use sybilscope_core::sybil::{
    kmeans_cluster, knn_search, normalize_clusters, ClusterFilterPolicy, FlatIndex, KMeansResult,
    SybilClusterSet,
};
use sybilscope_core::synth::SynthConfig;
use sybilscope_core::votegraph::{build_voting_graph, VotingGraph};

fn announce(criterion: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[{verdict}] criterion {criterion}: {name} — {detail}");
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

// ---------------------------------------------------------------- fixtures

fn vote(addr: &str, prop: &str, ts: i64, power: f64, choice: i64) -> VoteRecord {
    VoteRecord {
        voter_address: addr.into(),
        proposal_id: prop.into(),
        space_id: "dao".into(),
        voting_power: power,
        timestamp: ts,
        choice,
    }
}

/// 5 voters × 3 proposals → 8 nodes, small enough for finite differences.
fn small_graph() -> VotingGraph {
    let votes = vec![
        vote("0xa", "p1", 100, 2.0, 1),
        vote("0xb", "p1", 200, 1.0, 2),
        vote("0xb", "p2", 90_000, 1.5, 1),
        vote("0xc", "p2", 95_000, 4.0, 3),
        vote("0xc", "p3", 180_000, 0.5, 1),
        vote("0xd", "p3", 185_000, 2.5, 2),
        vote("0xe", "p1", 300, 3.0, 1),
        vote("0xe", "p3", 190_000, 1.0, 3),
    ];
    let registry = vec![("0xa".to_string(), "alice".to_string())];
    build_voting_graph(&votes, &registry).unwrap()
}

/// The small pipeline configuration used by the structural criteria.
fn tiny_pipeline_config(out_dir: std::path::PathBuf) -> PipelineConfig {
    PipelineConfig {
        out_dir,
        train: TrainConfig {
            embedding_dim: 4,
            hidden: 8,
            seq_len: 4,
            heads: 2,
            epochs: 4,
            ..TrainConfig::default()
        },
        k: Some(4),
        max_iters: 20,
        label_k: 2,
        synth: SynthConfig {
            honest_voters: 12,
            sybil_entities: 3,
            wallets_per_sybil: (3, 3),
            proposals: 8,
            votes_per_voter: (3, 5),
            behavior_noise: 0.02,
            known_fraction: 0.4,
            seed: 0,
        },
        seed: 42,
        ..PipelineConfig::default()
    }
}

// ---------------------------------------------------------------- criteria

#[test]
fn criterion_1_full_model_gradients() {
    let start_time = Instant::now();
    let graph = small_graph();
    assert!(graph.node_count() <= 10);
    let config = TrainConfig {
        embedding_dim: 2,
        hidden: 4,
        seq_len: 2,
        heads: 2,
        seed: 17,
        ..TrainConfig::default()
    };
    let features = engineer_features(&graph, &config).unwrap();
    let template = ModelParams::init(&config);

    let with_blocks = |tensors: &[Tensor]| {
        let mut params = template.clone();
        for (dst, src) in params.blocks_mut().into_iter().zip(tensors) {
            *dst = src.clone();
        }
        params
    };
    let start: Vec<Tensor> = template
        .blocks()
        .into_iter()
        .map(|(_, t)| t.clone())
        .collect();
    let (_, analytic) =
        reconstruction_loss_and_gradients(&with_blocks(&start), &features).unwrap();
    let report = finite_diff_check(
        |p| reconstruction_loss(&with_blocks(p), &features),
        &start,
        &analytic,
        FD_TOLERANCE,
    )
    .unwrap();

    let elapsed = start_time.elapsed();
    announce(
        1,
        "full-model gradients match finite differences",
        report.pass && elapsed.as_secs() < 60,
        &format!(
            "max rel error {:.3e} over {} entries in {:.1}s",
            report.max_rel_error,
            report.checked,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_exact_index_matches_oracle() {
    let start_time = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut checked = 0usize;
    let mut all_match = true;

    for _ in 0..50 {
        let n = rng.gen_range(2..=500);
        let d = rng.gen_range(1..=64);
        let k = rng.gen_range(1..=n.min(10));
        let data: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let points = Tensor::new(vec![n, d], data).unwrap();
        let index = FlatIndex::build(points.clone(), (0..n).collect()).unwrap();
        let (ids, dists) = knn_search(&index, &points, k).unwrap();

        for q in 0..n {
            // Brute-force oracle: full distance scan, same tie rule.
            let mut scan: Vec<(f64, usize)> = (0..n)
                .map(|j| {
                    let dist: f64 = (0..d)
                        .map(|c| {
                            let diff = points.get2(q, c) - points.get2(j, c);
                            diff * diff
                        })
                        .sum();
                    (dist, j)
                })
                .collect();
            scan.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let expected_ids: Vec<usize> = scan.iter().take(k).map(|&(_, j)| j).collect();
            let expected_dists: Vec<f64> = scan.iter().take(k).map(|&(dist, _)| dist).collect();
            if ids[q] != expected_ids || dists[q] != expected_dists {
                all_match = false;
            }
            checked += 1;
        }
    }

    let elapsed = start_time.elapsed();
    announce(
        2,
        "knn_search equals the brute-force oracle",
        all_match && elapsed.as_secs() < 60,
        &format!(
            "{} queries across 50 instances in {:.1}s",
            checked,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_3_kmeans_properties() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut monotone = true;
    for _ in 0..100 {
        let m = rng.gen_range(4..=60);
        let d = rng.gen_range(1..=8);
        let k = rng.gen_range(1..=m.min(8));
        let data: Vec<f64> = (0..m * d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let points = Tensor::new(vec![m, d], data).unwrap();
        let result = kmeans_cluster(&points, k, 50, rng.gen()).unwrap();
        for pair in result.objective_history.windows(2) {
            if pair[1] > pair[0] + 1e-9 {
                monotone = false;
            }
        }
    }

    // k = n pins one centroid on each point.
    let points = Tensor::new(
        vec![5, 2],
        vec![0.0, 0.0, 1.0, 0.0, 2.0, 3.0, -4.0, 1.0, 5.0, -2.0],
    )
    .unwrap();
    let exact = kmeans_cluster(&points, 5, 10, 0).unwrap();
    let zero_objective = exact.objective == 0.0;

    // Two well-separated blobs are recovered exactly.
    let mut blob_data = Vec::new();
    for i in 0..20 {
        let jitter = (i % 5) as f64 * 0.01;
        if i < 10 {
            blob_data.extend_from_slice(&[-100.0 + jitter, -100.0]);
        } else {
            blob_data.extend_from_slice(&[100.0 + jitter, 100.0]);
        }
    }
    let blobs = Tensor::new(vec![20, 2], blob_data).unwrap();
    let found = kmeans_cluster(&blobs, 2, 50, 7).unwrap();
    let first = found.assignments[0];
    let blobs_recovered = found.assignments[..10].iter().all(|&a| a == first)
        && found.assignments[10..].iter().all(|&a| a != first);

    announce(
        3,
        "k-means objective monotone, k=n exact, blobs recovered",
        monotone && zero_objective && blobs_recovered,
        &format!(
            "100 instances monotone: {monotone}, k=n objective: {}, blobs: {blobs_recovered}",
            exact.objective
        ),
    );
}

#[test]
fn criterion_4_cluster_filter_scaled_shape() {
    // Scaled-down shape of the observed filter transformation: many small
    // clusters, a few singletons, one dominant cluster two orders larger.
    // 65 clusters of sizes: 4 singletons, 60 spread in [2, 30], 1 of 400.
    let mut sizes: Vec<usize> = Vec::new();
    sizes.extend(std::iter::repeat(1).take(4));
    for i in 0..60 {
        sizes.push(2 + (i % 29));
    }
    sizes.push(400);

    let mut assignments = Vec::new();
    for (cluster, &s) in sizes.iter().enumerate() {
        assignments.extend(std::iter::repeat(cluster).take(s));
    }
    let m = assignments.len();
    let km = KMeansResult {
        k: sizes.len(),
        centroids: Tensor::zeros(&[sizes.len(), 1]),
        assignments,
        objective: 0.0,
        iterations_run: 1,
        objective_history: vec![0.0],
    };
    let node_ids: Vec<usize> = (0..m).collect();
    let set = normalize_clusters(&km, &node_ids, ClusterFilterPolicy::default()).unwrap();

    // Exactly the 4 singletons and the dominant cluster must go: 65 → 60.
    let kept_sizes: Vec<usize> = set.clusters.iter().map(|c| c.members.len()).collect();
    let dropped_dominant = !kept_sizes.contains(&400);
    let no_singletons = kept_sizes.iter().all(|&s| s >= 2);
    let count_ok = set.stats.total_clusters == 60;
    let max_ok = set.stats.max_size == 30 && set.policy.size_threshold < 400.0;

    announce(
        4,
        "cluster filter drops singletons and the dominant cluster",
        dropped_dominant && no_singletons && count_ok && max_ok,
        &format!(
            "65 clusters -> {} (max size {} under threshold {:.1})",
            set.stats.total_clusters, set.stats.max_size, set.policy.size_threshold
        ),
    );
}

#[test]
fn criterion_5_graph_reduction_invariants() {
    let dir = tempdir().unwrap();
    let config = tiny_pipeline_config(dir.path().to_path_buf());
    pipeline::stage_synth(&config).unwrap();
    let report = pipeline::run_pipeline(&config).unwrap();

    let clusters: Artifact<SybilClusterSet> =
        load_artifact(&dir.path().join(CLUSTERS_FILE)).unwrap();
    let clusters = clusters.payload;

    let edges_preserved = report.original_graph.edges == report.similarity_graph.edges
        && report.original_graph.edges == report.clustered_graph.edges;
    let expected_reduction: usize = clusters
        .clusters
        .iter()
        .map(|c| c.members.len() - 1)
        .sum();
    let reduction_ok = report.node_reduction.nodes_removed == expected_reduction
        && report.original_graph.nodes - expected_reduction == report.clustered_graph.nodes;

    let graph: Artifact<VotingGraph> =
        load_artifact(&dir.path().join(pipeline::GRAPH_FILE)).unwrap();
    let clustered: Artifact<sybilscope_core::sybil::ClusteredGraph> =
        load_artifact(&dir.path().join(pipeline::CLUSTERED_FILE)).unwrap();
    let power_before: f64 = graph.payload.voters.iter().map(|v| v.total_power).sum();
    let power_after: f64 = clustered
        .payload
        .graph
        .voters
        .iter()
        .map(|v| v.total_power)
        .sum();
    let power_ok = (power_before - power_after).abs() <= 1e-9 * power_before.abs().max(1.0);

    announce(
        5,
        "edge count, node reduction, and power conservation",
        edges_preserved && reduction_ok && power_ok,
        &format!(
            "edges {} kept through both graphs; {} nodes removed; power drift {:.3e}",
            report.original_graph.edges,
            report.node_reduction.nodes_removed,
            (power_before - power_after).abs()
        ),
    );
}

#[test]
fn criterion_6_planted_sybil_recovery() {
    let start_time = Instant::now();
    let dir = tempdir().unwrap();
    // Planted instance: point-like sybil blobs among a diffuse honest cloud.
    // k is generous so every blob earns its own centroid, and the oversized
    // cut is off because this regime has no dominant cluster to trim.
    let config = PipelineConfig {
        out_dir: dir.path().to_path_buf(),
        train: TrainConfig {
            embedding_dim: 32,
            hidden: 32,
            seq_len: 8,
            heads: 2,
            epochs: 60,
            ..TrainConfig::default()
        },
        k: Some(300),
        max_iters: 60,
        drop_oversized: false,
        label_k: 5,
        synth: SynthConfig {
            honest_voters: 1000,
            sybil_entities: 50,
            wallets_per_sybil: (5, 5),
            proposals: 200,
            votes_per_voter: (5, 12),
            behavior_noise: 0.02,
            known_fraction: 0.3,
            seed: 0,
        },
        seed: 1,
        ..PipelineConfig::default()
    };

    pipeline::stage_synth(&config).unwrap();
    pipeline::run_pipeline(&config).unwrap();
    let eval = pipeline::stage_eval(&config).unwrap();

    let elapsed = start_time.elapsed();
    let scores = eval.scores;
    let pass = scores.pairwise_f1 >= 0.7
        && scores.adjusted_rand_index >= 0.5
        && eval.ari_margin >= 0.4
        && elapsed.as_secs() < 600;
    announce(
        6,
        "planted sybils recovered by the full pipeline",
        pass,
        &format!(
            "F1 {:.3} (precision {:.3}, recall {:.3}), ARI {:.3}, margin over random {:.3}, {:.0}s",
            scores.pairwise_f1,
            scores.pairwise_precision,
            scores.pairwise_recall,
            scores.adjusted_rand_index,
            eval.ari_margin,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_7_pipeline_determinism() {
    let dir = tempdir().unwrap();
    let config = tiny_pipeline_config(dir.path().to_path_buf());
    pipeline::stage_synth(&config).unwrap();
    pipeline::run_pipeline(&config).unwrap();
    let files = [CLUSTERS_FILE, REPORT_FILE, REPORT_TEXT_FILE];
    let first: Vec<Vec<u8>> = files
        .iter()
        .map(|f| std::fs::read(dir.path().join(f)).unwrap())
        .collect();

    pipeline::stage_synth(&config).unwrap();
    pipeline::run_pipeline(&config).unwrap();
    let identical = files
        .iter()
        .zip(&first)
        .all(|(f, before)| &std::fs::read(dir.path().join(f)).unwrap() == before);

    announce(
        7,
        "rerun reproduces cluster set and report byte-for-byte",
        identical,
        &format!("{} artifacts compared", files.len()),
    );
}

#[test]
fn criterion_8_report_shape() {
    let dir = tempdir().unwrap();
    let config = tiny_pipeline_config(dir.path().to_path_buf());
    pipeline::stage_synth(&config).unwrap();
    pipeline::run_pipeline(&config).unwrap();

    let raw = std::fs::read(dir.path().join(REPORT_FILE)).unwrap();
    let value: serde_json::Value = serde_json::from_slice(&raw).unwrap();
    let payload = value["payload"].as_object().unwrap();

    let expected = [
        "date_range",
        "original_graph",
        "similarity_graph",
        "clustered_graph",
        "known_voters",
        "unknown_voters",
        "potential_sybils_identified",
        "sybil_clusters_formed",
        "node_reduction",
    ];
    let mut keys: Vec<&str> = payload.keys().map(String::as_str).collect();
    keys.sort_unstable();
    let mut want: Vec<&str> = expected.to_vec();
    want.sort_unstable();
    let exact_keys = keys == want;

    let reduction = payload["node_reduction"].as_object().unwrap();
    let both_numerators =
        reduction.contains_key("nodes_removed") && reduction.contains_key("sybils_clustered");

    let text = std::fs::read_to_string(dir.path().join(REPORT_TEXT_FILE)).unwrap();
    let eleven_rows = text.lines().count() == 11;

    announce(
        8,
        "report carries exactly the nine labeled quantities",
        exact_keys && both_numerators && eleven_rows,
        &format!(
            "{} payload keys, both reduction numerators: {both_numerators}, {} text rows",
            keys.len(),
            text.lines().count()
        ),
    );
}
