//! Subcommand front end over the identification pipeline. Every stage
//! reads its inputs from the shared output directory and leaves versioned,
//! seed-stamped artifacts there, so runs are resumable and reproducible.
//!
//! Option precedence: command-line flags > config file > built-in defaults.
//! Exit codes: 0 success, 1 runtime failure, 2 usage/config error, 3 missing
//! stage dependency.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sybilscope_core::pipeline::{self, PipelineConfig};
use sybilscope_core::sybil::render_report_text;
use sybilscope_core::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_STAGE_DEPENDENCY: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sybilscope",
    version,
    about = "Identify likely sybil wallet clusters in anonymous voting networks"
)]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, stamped into every artifact.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Artifact directory shared by all stages.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Parser, Default)]
struct IngestArgs {
    /// Vote file (.csv, or .jsonl/.ndjson for JSON lines).
    #[arg(long, value_name = "PATH")]
    votes: Option<PathBuf>,
    /// Proposal metadata CSV; votes on filtered proposals are dropped.
    #[arg(long, value_name = "PATH")]
    proposals: Option<PathBuf>,
    /// Known-voter registry CSV (address,name).
    #[arg(long, value_name = "PATH")]
    registry: Option<PathBuf>,
    /// Minimum proposal duration kept, in days.
    #[arg(long, value_name = "DAYS")]
    min_duration: Option<i64>,
    /// Maximum proposal duration kept, in days.
    #[arg(long, value_name = "DAYS")]
    max_duration: Option<i64>,
}

#[derive(Debug, Clone, Parser, Default)]
struct TrainArgs {
    /// Training epochs.
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
    /// Sweep the hyperparameter grid before the final run.
    #[arg(long)]
    grid: bool,
}

#[derive(Debug, Clone, Parser, Default)]
struct ClusterArgs {
    /// Cluster count; defaults to one per hundred unknown voters.
    #[arg(long, value_name = "N")]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, sanitize, filter, and time-order raw votes.
    Ingest(IngestArgs),
    /// Build the voting graph and its sociometric profile.
    Stats,
    /// Fit the embedding model on the graph.
    Train(TrainArgs),
    /// Run the fitted model over every node.
    Embed,
    /// Cluster unknown voters in embedding space and label the clusters.
    Cluster(ClusterArgs),
    /// Merge each cluster into a single node.
    Reduce,
    /// Summarize the run in one table.
    Report,
    /// Generate a synthetic voting network with planted sybils.
    Synth,
    /// Score recovered clusters against generated ground truth.
    Eval {
        /// Ground-truth CSV (wallet,entity_id,type).
        #[arg(long, value_name = "PATH")]
        truth: Option<PathBuf>,
    },
    /// Run ingest through report in order.
    Pipeline {
        #[command(flatten)]
        ingest: IngestArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
}

/// A failure plus the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::StageDependency(_) => EXIT_STAGE_DEPENDENCY,
            Error::InvalidParameter(_) => EXIT_USAGE,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str(&text).map_err(|e| {
                Failure::usage(format!("invalid config {}: {e}", path.display()))
            })?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn apply_ingest(config: &mut PipelineConfig, args: &IngestArgs) {
    if args.votes.is_some() {
        config.votes = args.votes.clone();
    }
    if args.proposals.is_some() {
        config.proposals = args.proposals.clone();
    }
    if args.registry.is_some() {
        config.registry = args.registry.clone();
    }
    if let Some(d) = args.min_duration {
        config.min_duration_days = d;
    }
    if let Some(d) = args.max_duration {
        config.max_duration_days = d;
    }
}

fn apply_train(config: &mut PipelineConfig, args: &TrainArgs) {
    if let Some(epochs) = args.epochs {
        config.train.epochs = epochs;
    }
    if args.grid {
        config.grid = true;
    }
}

fn apply_cluster(config: &mut PipelineConfig, args: &ClusterArgs) {
    if args.k.is_some() {
        config.k = args.k;
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut config = load_config(&cli)?;
    config.validate().map_err(|e| Failure::usage(e.to_string()))?;

    match &cli.command {
        Command::Ingest(args) => {
            apply_ingest(&mut config, args);
            config.validate().map_err(|e| Failure::usage(e.to_string()))?;
            let dataset = pipeline::stage_ingest(&config)?;
            println!(
                "ingested {} votes over {} voters and {} proposals ({} malformed, {} filtered)",
                dataset.window.vote_count,
                dataset.window.voter_count,
                dataset.window.proposal_count,
                dataset.skipped_votes,
                dataset.filtered_votes
            );
        }
        Command::Stats => {
            let (_, stats) = pipeline::stage_stats(&config)?;
            println!(
                "graph: {} voters ({} known), {} proposals, {} edges, density {:.6}",
                stats.voter_count,
                stats.known_voters,
                stats.proposal_count,
                stats.edge_count,
                stats.density
            );
        }
        Command::Train(args) => {
            apply_train(&mut config, args);
            let checkpoint = pipeline::stage_train(&config)?;
            let best = &checkpoint.curve[checkpoint.best_epoch];
            println!(
                "trained {} epochs; best epoch {} (train mse {:.6}, val mse {:.6})",
                checkpoint.curve.len(),
                best.epoch,
                best.train_mse,
                best.val_mse
            );
        }
        Command::Embed => {
            let embeddings = pipeline::stage_embed(&config)?;
            println!(
                "embedded {} nodes into {} dimensions ({} dead)",
                embeddings.node_count(),
                embeddings.dim(),
                embeddings.dead_dims.len()
            );
        }
        Command::Cluster(args) => {
            apply_cluster(&mut config, args);
            config.validate().map_err(|e| Failure::usage(e.to_string()))?;
            let (set, _) = pipeline::stage_cluster(&config)?;
            println!(
                "{} clusters kept ({} voters flagged); size threshold {:.2}",
                set.stats.total_clusters,
                set.flagged_voters(),
                set.policy.size_threshold
            );
        }
        Command::Reduce => {
            let clustered = pipeline::stage_reduce(&config)?;
            println!(
                "reduced graph: {} nodes, {} edges",
                clustered.graph.node_count(),
                clustered.graph.edges.len()
            );
        }
        Command::Report => {
            let report = pipeline::stage_report(&config)?;
            print!("{}", render_report_text(&report));
        }
        Command::Synth => {
            let dataset = pipeline::stage_synth(&config)?;
            println!(
                "generated {} votes from {} wallets over {} proposals",
                dataset.votes.len(),
                dataset.truth.entity_of.len(),
                dataset.proposals.len()
            );
        }
        Command::Eval { truth } => {
            if truth.is_some() {
                config.truth = truth.clone();
            }
            let scores = pipeline::stage_eval(&config)?;
            println!(
                "pairwise precision {:.4}, recall {:.4}, F1 {:.4}",
                scores.scores.pairwise_precision,
                scores.scores.pairwise_recall,
                scores.scores.pairwise_f1
            );
            println!(
                "ARI {:.4} vs random baseline {:.4} (margin {:.4})",
                scores.scores.adjusted_rand_index,
                scores.random_baseline_ari,
                scores.ari_margin
            );
        }
        Command::Pipeline {
            ingest,
            train,
            cluster,
        } => {
            apply_ingest(&mut config, ingest);
            apply_train(&mut config, train);
            apply_cluster(&mut config, cluster);
            config.validate().map_err(|e| Failure::usage(e.to_string()))?;
            let report = pipeline::run_pipeline(&config)?;
            print!("{}", render_report_text(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
