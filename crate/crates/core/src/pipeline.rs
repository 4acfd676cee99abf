//! Stage orchestration shared by the command-line tool and the end-to-end
//! tests. Each stage reads the artifacts the previous stage left in the
//! output directory and writes its own, all wrapped in a versioned envelope
//! carrying the config hash and seed, so any run is reproducible and stale
//! artifact mixes are caught.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedder::{
    embed_all, engineer_features, grid_search, train, EmbeddingMatrix, EpochLoss, ModelParams,
    TrainConfig,
};
use crate::error::{Error, Result};
use crate::ingest::{
    filter_proposals, parse_proposals, parse_votes, window_and_sort, DatasetWindow,
    ProposalRecord, VoteFormat, VoteRecord,
};
use crate::sybil::{
    cluster_size_histogram_csv, clusters_csv, default_cluster_count, kmeans_cluster,
    normalize_clusters, propagate_labels, reduce_graph, render_report_text, sociometric_report,
    ClusterFilterPolicy, ClusteredGraph, PolicySnapshot, Report, SimilarityGraph, SybilClusterSet,
};
use crate::synth::{
    evaluate_recovery, generate_dataset, parse_truth_csv, random_clustering_ari, write_truth_csv,
    RecoveryScores, SynthConfig, SynthDataset,
};
use crate::votegraph::{
    build_voting_graph, parse_registry, sociometrics, Identity, StatsReport, VotingGraph,
};

pub const ARTIFACT_VERSION: u32 = 1;

pub const DATASET_FILE: &str = "dataset.json";
pub const GRAPH_FILE: &str = "graph.json";
pub const STATS_FILE: &str = "stats.json";
pub const DEGREE_HISTOGRAM_FILE: &str = "degree_histogram.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LOSS_CURVE_FILE: &str = "loss_curve.csv";
pub const GRID_FILE: &str = "grid.csv";
pub const EMBEDDINGS_FILE: &str = "embeddings.json";
pub const CLUSTERS_FILE: &str = "clusters.json";
pub const CLUSTERS_CSV_FILE: &str = "clusters.csv";
pub const CLUSTER_SIZES_FILE: &str = "cluster_sizes.csv";
pub const SIMILARITY_FILE: &str = "similarity.json";
pub const CLUSTERED_FILE: &str = "clustered.json";
pub const REPORT_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const SYNTH_VOTES_FILE: &str = "synth_votes.csv";
pub const SYNTH_PROPOSALS_FILE: &str = "synth_proposals.csv";
pub const SYNTH_REGISTRY_FILE: &str = "synth_registry.csv";
pub const SYNTH_TRUTH_FILE: &str = "synth_truth.csv";
pub const SCORES_FILE: &str = "scores.json";

/// Everything a run needs, loadable from one TOML document. The top-level
/// `seed` is authoritative: it is copied over the nested training and
/// generator seeds before any stage runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Vote input; defaults to the generator's output in `out_dir`.
    pub votes: Option<PathBuf>,
    /// Proposal metadata; votes on filtered-out proposals are dropped.
    pub proposals: Option<PathBuf>,
    /// Known-voter registry CSV (`address,name`).
    pub registry: Option<PathBuf>,
    /// Ground-truth CSV for `eval`; defaults to the generator's output.
    pub truth: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Keep only votes with timestamp ≥ this (defaults to the data minimum).
    pub window_start: Option<i64>,
    /// Keep only votes with timestamp ≤ this (defaults to the data maximum).
    pub window_end: Option<i64>,
    /// Proposal-duration band, in days.
    pub min_duration_days: i64,
    pub max_duration_days: i64,
    pub train: TrainConfig,
    /// Run the hyperparameter grid before the final training run.
    pub grid: bool,
    /// Cluster count; defaults to one per hundred unknown voters.
    pub k: Option<usize>,
    pub max_iters: usize,
    pub drop_singletons: bool,
    pub drop_oversized: bool,
    /// Neighbors consulted when propagating Known labels onto clusters.
    pub label_k: usize,
    pub synth: SynthConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            votes: None,
            proposals: None,
            registry: None,
            truth: None,
            out_dir: PathBuf::from("out"),
            window_start: None,
            window_end: None,
            min_duration_days: 0,
            max_duration_days: 3650,
            train: TrainConfig::default(),
            grid: false,
            k: None,
            max_iters: 100,
            drop_singletons: true,
            drop_oversized: true,
            label_k: 5,
            synth: SynthConfig::default(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Copies the top-level seed into the nested configs. Stages apply this
    /// before doing anything, so hashes are always over the effective form.
    pub fn normalized(&self) -> PipelineConfig {
        let mut out = self.clone();
        out.train.seed = self.seed;
        out.synth.seed = self.seed;
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_duration_days > self.max_duration_days {
            return Err(Error::InvalidParameter(format!(
                "proposal duration band inverted: {} > {} days",
                self.min_duration_days, self.max_duration_days
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if self.label_k == 0 {
            return Err(Error::InvalidParameter("label_k must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        self.train.validate()?;
        self.synth.validate()?;
        Ok(())
    }

    fn policy(&self) -> ClusterFilterPolicy {
        ClusterFilterPolicy {
            drop_singletons: self.drop_singletons,
            drop_oversized: self.drop_oversized,
        }
    }
}

/// SHA-256 of the normalized config's JSON form; stamped into every artifact.
pub fn config_hash(config: &PipelineConfig) -> Result<String> {
    let json = serde_json::to_string(&config.normalized())?;
    Ok(hex::encode(Sha256::digest(json.as_bytes())))
}

/// Envelope every JSON artifact is stored in.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub payload: T,
}

fn save_artifact<T: Serialize>(
    path: &Path,
    hash: &str,
    seed: u64,
    payload: &T,
) -> Result<()> {
    let artifact = Artifact {
        version: ARTIFACT_VERSION,
        config_hash: hash.to_string(),
        seed,
        payload,
    };
    let mut json = serde_json::to_string_pretty(&artifact)?;
    json.push('\n');
    fs::write(path, json)?;
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    match fs::read(path) {
        Ok(bytes) => Ok(bytes),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(Error::StageDependency(path.to_path_buf()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Loads an artifact, rejecting unsupported versions. A missing file is a
/// stage-dependency error naming the path.
pub fn load_artifact<T: DeserializeOwned>(path: &Path) -> Result<Artifact<T>> {
    let bytes = read_file(path)?;
    let artifact: Artifact<T> = serde_json::from_slice(&bytes)?;
    if artifact.version != ARTIFACT_VERSION {
        return Err(Error::ArtifactVersion {
            found: artifact.version,
            expected: ARTIFACT_VERSION,
        });
    }
    Ok(artifact)
}

/// Output of the ingest stage: the cleaned, windowed dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetPayload {
    pub votes: Vec<VoteRecord>,
    pub proposals: Vec<ProposalRecord>,
    pub registry: Vec<(String, String)>,
    pub window: DatasetWindow,
    /// Records the parser skipped as malformed.
    pub skipped_votes: usize,
    /// Proposals outside the duration band.
    pub rejected_proposals: usize,
    /// Votes dropped because their proposal was rejected.
    pub filtered_votes: usize,
}

/// Output of the train stage: the fitted model and its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointPayload {
    pub params: ModelParams,
    /// The exact hyperparameters the checkpoint was trained with.
    pub train_config: TrainConfig,
    pub best_epoch: usize,
    pub curve: Vec<EpochLoss>,
}

/// Output of the eval stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoresPayload {
    pub scores: RecoveryScores,
    /// Mean ARI of random assignments into the same number of clusters.
    pub random_baseline_ari: f64,
    /// Recovered ARI minus the random baseline.
    pub ari_margin: f64,
    pub cluster_count_used: usize,
}

fn out_path(config: &PipelineConfig, name: &str) -> PathBuf {
    config.out_dir.join(name)
}

fn format_of(path: &Path) -> VoteFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("ndjson") => VoteFormat::JsonLines,
        _ => VoteFormat::Csv,
    }
}

/// Reads, sanitizes, filters, and time-orders the raw inputs.
pub fn stage_ingest(config: &PipelineConfig) -> Result<DatasetPayload> {
    let config = config.normalized();
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;
    let hash = config_hash(&config)?;

    let votes_path = config
        .votes
        .clone()
        .unwrap_or_else(|| out_path(&config, SYNTH_VOTES_FILE));
    let raw = read_file(&votes_path)?;
    let outcome = parse_votes(&raw[..], format_of(&votes_path))?;
    let mut votes = outcome.records;
    let skipped_votes = outcome.diagnostics.len();

    let proposals_path = config
        .proposals
        .clone()
        .or_else(|| {
            let default = out_path(&config, SYNTH_PROPOSALS_FILE);
            default.exists().then_some(default)
        });
    let (proposals, rejected_proposals, filtered_votes) = match proposals_path {
        Some(path) => {
            let parsed = parse_proposals(&read_file(&path)?[..])?;
            let (kept, rejected) = filter_proposals(
                &parsed,
                config.min_duration_days * 86_400,
                config.max_duration_days * 86_400,
            )?;
            let keep: std::collections::BTreeSet<&str> =
                kept.iter().map(|p| p.proposal_id.as_str()).collect();
            let before = votes.len();
            votes.retain(|v| keep.contains(v.proposal_id.as_str()));
            (kept, rejected, before - votes.len())
        }
        None => (Vec::new(), 0, 0),
    };

    let registry = match &config.registry {
        Some(path) => parse_registry(&read_file(path)?[..])?,
        None => {
            let default = out_path(&config, SYNTH_REGISTRY_FILE);
            if default.exists() {
                parse_registry(&read_file(&default)?[..])?
            } else {
                Vec::new()
            }
        }
    };

    let start = config
        .window_start
        .or_else(|| votes.iter().map(|v| v.timestamp).min())
        .unwrap_or(0);
    let end = config
        .window_end
        .or_else(|| votes.iter().map(|v| v.timestamp).max())
        .unwrap_or(0);
    let (votes, window) = window_and_sort(&votes, start, end)?;

    let payload = DatasetPayload {
        votes,
        proposals,
        registry,
        window,
        skipped_votes,
        rejected_proposals,
        filtered_votes,
    };
    save_artifact(
        &out_path(&config, DATASET_FILE),
        &hash,
        config.seed,
        &payload,
    )?;
    Ok(payload)
}

/// Builds the voting graph and its sociometric profile.
pub fn stage_stats(config: &PipelineConfig) -> Result<(VotingGraph, StatsReport)> {
    let config = config.normalized();
    let hash = config_hash(&config)?;
    let dataset: Artifact<DatasetPayload> = load_artifact(&out_path(&config, DATASET_FILE))?;

    let graph = build_voting_graph(&dataset.payload.votes, &dataset.payload.registry)?;
    graph.validate()?;
    let stats = sociometrics(&graph);

    save_artifact(&out_path(&config, GRAPH_FILE), &hash, config.seed, &graph)?;
    save_artifact(&out_path(&config, STATS_FILE), &hash, config.seed, &stats)?;

    let mut csv = String::from("degree,count\n");
    for (degree, count) in &stats.degree_histogram {
        csv.push_str(&format!("{degree},{count}\n"));
    }
    fs::write(out_path(&config, DEGREE_HISTOGRAM_FILE), csv)?;
    Ok((graph, stats))
}

/// Fits the embedding model, optionally after a hyperparameter grid.
pub fn stage_train(config: &PipelineConfig) -> Result<CheckpointPayload> {
    let config = config.normalized();
    let hash = config_hash(&config)?;
    let graph: Artifact<VotingGraph> = load_artifact(&out_path(&config, GRAPH_FILE))?;
    let graph = graph.payload;

    let train_config = if config.grid {
        let outcome = grid_search(&graph, &config.train)?;
        let mut csv = String::from("embedding_dim,learning_rate,heads,seed,val_mse\n");
        for row in &outcome.table {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                row.embedding_dim, row.learning_rate, row.heads, row.seed, row.val_mse
            ));
        }
        fs::write(out_path(&config, GRID_FILE), csv)?;
        outcome.best
    } else {
        config.train.clone()
    };

    let outcome = train(&graph, &train_config)?;
    let payload = CheckpointPayload {
        params: outcome.params,
        train_config,
        best_epoch: outcome.best_epoch,
        curve: outcome.curve,
    };

    save_artifact(
        &out_path(&config, CHECKPOINT_FILE),
        &hash,
        config.seed,
        &payload,
    )?;
    let mut csv = String::from("epoch,train_mse,val_mse\n");
    for point in &payload.curve {
        csv.push_str(&format!(
            "{},{},{}\n",
            point.epoch, point.train_mse, point.val_mse
        ));
    }
    fs::write(out_path(&config, LOSS_CURVE_FILE), csv)?;
    Ok(payload)
}

/// Runs the fitted model over the whole graph and normalizes the output.
pub fn stage_embed(config: &PipelineConfig) -> Result<EmbeddingMatrix> {
    let config = config.normalized();
    let hash = config_hash(&config)?;
    let graph: Artifact<VotingGraph> = load_artifact(&out_path(&config, GRAPH_FILE))?;
    let checkpoint: Artifact<CheckpointPayload> =
        load_artifact(&out_path(&config, CHECKPOINT_FILE))?;
    let checkpoint = checkpoint.payload;

    let features = engineer_features(&graph.payload, &checkpoint.train_config)?;
    let embeddings = embed_all(
        &checkpoint.params,
        &features,
        checkpoint.train_config.variability_floor,
    )?;
    save_artifact(
        &out_path(&config, EMBEDDINGS_FILE),
        &hash,
        config.seed,
        &embeddings,
    )?;
    Ok(embeddings)
}

/// Unknown-voter node ids, ascending.
fn unknown_voter_ids(graph: &VotingGraph) -> Vec<usize> {
    let mut ids: Vec<usize> = graph
        .voters
        .iter()
        .filter(|v| matches!(v.identity, Identity::Unknown))
        .map(|v| v.node_id)
        .collect();
    ids.sort_unstable();
    ids
}

/// Clusters the unknown voters in embedding space, filters the clusters,
/// and propagates Known labels onto the survivors.
pub fn stage_cluster(config: &PipelineConfig) -> Result<(SybilClusterSet, SimilarityGraph)> {
    let config = config.normalized();
    let hash = config_hash(&config)?;
    let graph: Artifact<VotingGraph> = load_artifact(&out_path(&config, GRAPH_FILE))?;
    let graph = graph.payload;
    let embeddings: Artifact<EmbeddingMatrix> =
        load_artifact(&out_path(&config, EMBEDDINGS_FILE))?;
    let embeddings = embeddings.payload;

    let node_ids = unknown_voter_ids(&graph);
    let (set, similarity) = if node_ids.is_empty() {
        let set = SybilClusterSet {
            clusters: Vec::new(),
            policy: PolicySnapshot {
                drop_singletons: config.drop_singletons,
                drop_oversized: config.drop_oversized,
                mean_size: 0.0,
                std_size: 0.0,
                size_threshold: 0.0,
            },
            stats: crate::sybil::ClusterStats {
                total_clusters: 0,
                mean_size: 0.0,
                min_size: 0,
                max_size: 0,
            },
        };
        let similarity = SimilarityGraph {
            graph: graph.clone(),
            propagated: Default::default(),
        };
        (set, similarity)
    } else {
        let d = embeddings.dim();
        let rows: Vec<f64> = node_ids
            .iter()
            .flat_map(|&id| embeddings.matrix.row(id).iter().copied())
            .collect();
        let points = crate::numcore::Tensor::new(vec![node_ids.len(), d], rows)?;
        let k = config
            .k
            .unwrap_or_else(|| default_cluster_count(node_ids.len()))
            .min(node_ids.len());
        let km = kmeans_cluster(&points, k, config.max_iters, config.seed)?;
        let mut set = normalize_clusters(&km, &node_ids, config.policy())?;
        let similarity = propagate_labels(&graph, &embeddings, &mut set, config.label_k)?;
        (set, similarity)
    };

    save_artifact(&out_path(&config, CLUSTERS_FILE), &hash, config.seed, &set)?;
    save_artifact(
        &out_path(&config, SIMILARITY_FILE),
        &hash,
        config.seed,
        &similarity,
    )?;
    fs::write(out_path(&config, CLUSTERS_CSV_FILE), clusters_csv(&set))?;
    fs::write(
        out_path(&config, CLUSTER_SIZES_FILE),
        cluster_size_histogram_csv(&set),
    )?;
    Ok((set, similarity))
}

/// Merges each surviving cluster into a single node.
pub fn stage_reduce(config: &PipelineConfig) -> Result<ClusteredGraph> {
    let config = config.normalized();
    let hash = config_hash(&config)?;
    let similarity: Artifact<SimilarityGraph> =
        load_artifact(&out_path(&config, SIMILARITY_FILE))?;
    let clusters: Artifact<SybilClusterSet> = load_artifact(&out_path(&config, CLUSTERS_FILE))?;

    let clustered = reduce_graph(&similarity.payload, &clusters.payload)?;
    save_artifact(
        &out_path(&config, CLUSTERED_FILE),
        &hash,
        config.seed,
        &clustered,
    )?;
    Ok(clustered)
}

/// Checks that every input artifact carries the same config hash.
fn require_same_hash(stamps: &[(&Path, &str)]) -> Result<()> {
    if let Some(((first_path, first_hash), rest)) = stamps.split_first() {
        for (path, hash) in rest {
            if hash != first_hash {
                return Err(Error::ConfigHashMismatch {
                    left: first_hash.to_string(),
                    left_path: first_path.to_path_buf(),
                    right: hash.to_string(),
                    right_path: path.to_path_buf(),
                });
            }
        }
    }
    Ok(())
}

/// Assembles the final summary from the stage artifacts. Refuses to combine
/// artifacts produced under different configs.
pub fn stage_report(config: &PipelineConfig) -> Result<Report> {
    let config = config.normalized();

    let dataset_path = out_path(&config, DATASET_FILE);
    let graph_path = out_path(&config, GRAPH_FILE);
    let similarity_path = out_path(&config, SIMILARITY_FILE);
    let clusters_path = out_path(&config, CLUSTERS_FILE);
    let clustered_path = out_path(&config, CLUSTERED_FILE);

    let dataset: Artifact<DatasetPayload> = load_artifact(&dataset_path)?;
    let graph: Artifact<VotingGraph> = load_artifact(&graph_path)?;
    let similarity: Artifact<SimilarityGraph> = load_artifact(&similarity_path)?;
    let clusters: Artifact<SybilClusterSet> = load_artifact(&clusters_path)?;
    let clustered: Artifact<ClusteredGraph> = load_artifact(&clustered_path)?;

    require_same_hash(&[
        (&dataset_path, &dataset.config_hash),
        (&graph_path, &graph.config_hash),
        (&similarity_path, &similarity.config_hash),
        (&clusters_path, &clusters.config_hash),
        (&clustered_path, &clustered.config_hash),
    ])?;

    let report = sociometric_report(
        &graph.payload,
        &similarity.payload,
        &clustered.payload,
        &clusters.payload,
        &dataset.payload.window,
    );
    // The report describes the run that produced its inputs, so it inherits
    // their (verified-equal) hash and seed rather than the invoking config's.
    save_artifact(
        &out_path(&config, REPORT_FILE),
        &dataset.config_hash,
        dataset.seed,
        &report,
    )?;
    fs::write(
        out_path(&config, REPORT_TEXT_FILE),
        render_report_text(&report),
    )?;
    Ok(report)
}

/// Generates a synthetic dataset into the output directory, in the same
/// CSV formats the ingest stage consumes.
pub fn stage_synth(config: &PipelineConfig) -> Result<SynthDataset> {
    let config = config.normalized();
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;

    let dataset = generate_dataset(&config.synth)?;

    let mut votes_csv = Vec::new();
    crate::ingest::write_votes_csv(&dataset.votes, &mut votes_csv)?;
    fs::write(out_path(&config, SYNTH_VOTES_FILE), votes_csv)?;

    let mut proposals_csv = Vec::new();
    crate::ingest::write_proposals_csv(&dataset.proposals, &mut proposals_csv)?;
    fs::write(out_path(&config, SYNTH_PROPOSALS_FILE), proposals_csv)?;

    let mut registry_csv = String::from("address,name\n");
    for (address, name) in &dataset.registry {
        registry_csv.push_str(&format!("{address},{name}\n"));
    }
    fs::write(out_path(&config, SYNTH_REGISTRY_FILE), registry_csv)?;

    fs::write(
        out_path(&config, SYNTH_TRUTH_FILE),
        write_truth_csv(&dataset.truth),
    )?;
    Ok(dataset)
}

/// Scores the recovered clusters against ground truth and a random baseline.
pub fn stage_eval(config: &PipelineConfig) -> Result<ScoresPayload> {
    let config = config.normalized();
    let hash = config_hash(&config)?;
    let graph: Artifact<VotingGraph> = load_artifact(&out_path(&config, GRAPH_FILE))?;
    let graph = graph.payload;
    let clusters: Artifact<SybilClusterSet> = load_artifact(&out_path(&config, CLUSTERS_FILE))?;

    let truth_path = config
        .truth
        .clone()
        .unwrap_or_else(|| out_path(&config, SYNTH_TRUTH_FILE));
    let truth_text = String::from_utf8(read_file(&truth_path)?)
        .map_err(|_| Error::InvalidParameter("truth file is not UTF-8".into()))?;
    let truth = parse_truth_csv(&truth_text)?;

    let scores = evaluate_recovery(&clusters.payload, &truth, &graph)?;
    let unknown = unknown_voter_ids(&graph).len();
    let k = config
        .k
        .unwrap_or_else(|| default_cluster_count(unknown))
        .min(unknown.max(1));
    let baseline_runs = 10;
    let mut baseline_sum = 0.0;
    for i in 0..baseline_runs {
        baseline_sum += random_clustering_ari(&truth, k, config.seed.wrapping_add(i))?;
    }
    let random_baseline_ari = baseline_sum / baseline_runs as f64;

    let payload = ScoresPayload {
        scores,
        random_baseline_ari,
        ari_margin: scores.adjusted_rand_index - random_baseline_ari,
        cluster_count_used: k,
    };
    save_artifact(&out_path(&config, SCORES_FILE), &hash, config.seed, &payload)?;
    Ok(payload)
}

/// Runs ingest through report in order.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Report> {
    stage_ingest(config)?;
    stage_stats(config)?;
    stage_train(config)?;
    stage_embed(config)?;
    stage_cluster(config)?;
    stage_reduce(config)?;
    stage_report(config)
}
