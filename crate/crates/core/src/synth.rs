//! Synthetic voting networks with planted sybil entities, plus scoring of
//! recovered clusters against the ground-truth entity partition.
//!
//! Each entity draws one latent behavior profile — a preference weighting
//! over proposals, a log-normal power scale, and an activity rhythm — and
//! every wallet it controls replays that profile, perturbed by a
//! configurable noise level. Honest voters are singleton entities.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ProposalRecord, VoteRecord};
use crate::sybil::SybilClusterSet;
use crate::votegraph::VotingGraph;

const SECONDS_PER_DAY: i64 = 86_400;
/// All synthetic activity starts here (2020-09-13) so timestamps stay
/// positive under noise shifts.
const EPOCH_BASE: i64 = 1_600_000_000;
/// Voting window length for every synthetic proposal.
const PROPOSAL_DURATION: i64 = 7 * SECONDS_PER_DAY;

/// Shape of a generated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub honest_voters: usize,
    pub sybil_entities: usize,
    /// Inclusive (min, max) wallets controlled by each sybil entity.
    pub wallets_per_sybil: (usize, usize),
    pub proposals: usize,
    /// Inclusive (min, max) votes each voter casts.
    pub votes_per_voter: (usize, usize),
    /// 0 = wallets of one entity vote identically; 1 = fully scrambled.
    pub behavior_noise: f64,
    /// Fraction of honest voters given a registry name.
    pub known_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            honest_voters: 100,
            sybil_entities: 10,
            wallets_per_sybil: (3, 6),
            proposals: 40,
            votes_per_voter: (4, 10),
            behavior_noise: 0.05,
            known_fraction: 0.3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.behavior_noise) {
            return Err(Error::InvalidParameter(format!(
                "behavior_noise must lie in [0, 1], got {}",
                self.behavior_noise
            )));
        }
        if !(0.0..=1.0).contains(&self.known_fraction) {
            return Err(Error::InvalidParameter(format!(
                "known_fraction must lie in [0, 1], got {}",
                self.known_fraction
            )));
        }
        if self.sybil_entities > 0 && self.wallets_per_sybil.0 == 0 {
            return Err(Error::InvalidParameter(
                "wallets_per_sybil minimum must be at least 1".into(),
            ));
        }
        if self.wallets_per_sybil.0 > self.wallets_per_sybil.1 {
            return Err(Error::InvalidParameter(
                "wallets_per_sybil minimum exceeds maximum".into(),
            ));
        }
        if self.votes_per_voter.0 == 0 || self.votes_per_voter.0 > self.votes_per_voter.1 {
            return Err(Error::InvalidParameter(
                "votes_per_voter must satisfy 1 <= min <= max".into(),
            ));
        }
        let voters = self.honest_voters + self.sybil_entities;
        if voters > 0 && self.votes_per_voter.1 > self.proposals {
            return Err(Error::InvalidParameter(format!(
                "votes_per_voter maximum {} exceeds proposal count {}",
                self.votes_per_voter.1, self.proposals
            )));
        }
        Ok(())
    }
}

/// Whether an entity is a genuine individual or a planted sybil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityKind {
    Honest,
    Sybil,
}

/// The generator's answer key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Every generated wallet address → its controlling entity.
    pub entity_of: BTreeMap<String, usize>,
    /// Entity id → kind.
    pub kind_of: BTreeMap<usize, EntityKind>,
}

impl GroundTruth {
    /// Sybil wallet addresses, in address order.
    pub fn sybil_wallets(&self) -> Vec<&str> {
        self.entity_of
            .iter()
            .filter(|(_, e)| self.kind_of[e] == EntityKind::Sybil)
            .map(|(w, _)| w.as_str())
            .collect()
    }
}

/// Everything one generation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub votes: Vec<VoteRecord>,
    pub proposals: Vec<ProposalRecord>,
    /// (wallet address, registry name) pairs for the known fraction.
    pub registry: Vec<(String, String)>,
    pub truth: GroundTruth,
}

/// One vote in an entity's canonical plan.
#[derive(Clone)]
struct PlannedVote {
    proposal: usize,
    power: f64,
    timestamp: i64,
    choice: i64,
}

/// Draws an entity's canonical vote plan: which proposals it favors, how
/// much power it wields, and when it shows up.
fn draw_plan(rng: &mut ChaCha20Rng, config: &SynthConfig) -> Vec<PlannedVote> {
    let p = config.proposals;
    // Exponential preference weights concentrate each entity on its own
    // handful of proposals.
    let weights: Vec<f64> = (0..p)
        .map(|_| -rng.gen::<f64>().max(1e-12).ln())
        .collect();
    let picker = WeightedIndex::new(&weights).expect("positive weights");
    let power_scale: f64 = LogNormal::new(0.0, 1.0).expect("valid").sample(rng);
    let (vmin, vmax) = config.votes_per_voter;
    let n_votes = rng.gen_range(vmin..=vmax);

    let mut chosen = vec![false; p];
    let mut plan = Vec::with_capacity(n_votes);
    for _ in 0..n_votes {
        let mut proposal = picker.sample(rng);
        while chosen[proposal] {
            proposal = rng.gen_range(0..p);
        }
        chosen[proposal] = true;
        let jitter: f64 = rng.sample(StandardNormal);
        let delay = rng.gen_range(0..6 * SECONDS_PER_DAY);
        plan.push(PlannedVote {
            proposal,
            power: power_scale * (0.15 * jitter).exp(),
            timestamp: proposal_start(proposal) + delay,
            choice: rng.gen_range(1..=3),
        });
    }
    plan.sort_by_key(|v| v.proposal);
    plan
}

fn proposal_start(index: usize) -> i64 {
    EPOCH_BASE + index as i64 * SECONDS_PER_DAY
}

fn proposal_name(index: usize) -> String {
    format!("prop-{index:04}")
}

fn space_name(index: usize) -> String {
    format!("dao{}", index % 3)
}

/// Replays a plan through one wallet, perturbing each vote by the noise
/// level. Zero noise reproduces the plan exactly.
fn perturb_plan(
    rng: &mut ChaCha20Rng,
    plan: &[PlannedVote],
    noise: f64,
    proposals: usize,
) -> Vec<PlannedVote> {
    plan.iter()
        .map(|v| {
            let mut out = v.clone();
            if noise > 0.0 {
                if rng.gen_bool(noise) {
                    out.proposal = rng.gen_range(0..proposals);
                    out.timestamp = proposal_start(out.proposal) + rng.gen_range(0..6 * SECONDS_PER_DAY);
                }
                let power_jitter: f64 = rng.sample(StandardNormal);
                out.power *= (noise * power_jitter).exp();
                let time_jitter: f64 = rng.sample(StandardNormal);
                out.timestamp += (noise * time_jitter * SECONDS_PER_DAY as f64) as i64;
                if rng.gen_bool(noise) {
                    out.choice = rng.gen_range(1..=3);
                }
            }
            out
        })
        .collect()
}

fn wallet_address(entity: usize, wallet: usize) -> String {
    format!("0x{entity:032x}{wallet:08x}")
}

/// Generates a full synthetic dataset: votes, proposals, a registry covering
/// the known fraction of honest voters, and the ground-truth entity map.
/// Deterministic for a given config.
pub fn generate_dataset(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);

    let proposals: Vec<ProposalRecord> = (0..config.proposals)
        .map(|j| {
            let start = proposal_start(j);
            ProposalRecord {
                proposal_id: proposal_name(j),
                space_id: space_name(j),
                start,
                end: start + PROPOSAL_DURATION,
                duration: PROPOSAL_DURATION,
            }
        })
        .collect();

    let mut votes = Vec::new();
    let mut registry = Vec::new();
    let mut entity_of = BTreeMap::new();
    let mut kind_of = BTreeMap::new();

    let emit = |votes: &mut Vec<VoteRecord>, wallet: &str, plan: &[PlannedVote]| {
        for v in plan {
            votes.push(VoteRecord {
                voter_address: wallet.to_string(),
                proposal_id: proposal_name(v.proposal),
                space_id: space_name(v.proposal),
                voting_power: v.power,
                timestamp: v.timestamp,
                choice: v.choice,
            });
        }
    };

    for entity in 0..config.honest_voters {
        let plan = draw_plan(&mut rng, config);
        let wallet = wallet_address(entity, 0);
        emit(&mut votes, &wallet, &plan);
        if rng.gen_bool(config.known_fraction) {
            registry.push((wallet.clone(), format!("user{entity}.eth")));
        }
        entity_of.insert(wallet, entity);
        kind_of.insert(entity, EntityKind::Honest);
    }

    for s in 0..config.sybil_entities {
        let entity = config.honest_voters + s;
        let plan = draw_plan(&mut rng, config);
        let (wmin, wmax) = config.wallets_per_sybil;
        let n_wallets = rng.gen_range(wmin..=wmax);
        for w in 0..n_wallets {
            let wallet = wallet_address(entity, w);
            let replay = perturb_plan(&mut rng, &plan, config.behavior_noise, config.proposals);
            emit(&mut votes, &wallet, &replay);
            entity_of.insert(wallet, entity);
        }
        kind_of.insert(entity, EntityKind::Sybil);
    }

    Ok(SynthDataset {
        votes,
        proposals,
        registry,
        truth: GroundTruth { entity_of, kind_of },
    })
}

/// Renders the answer key as `wallet,entity_id,type` CSV.
pub fn write_truth_csv(truth: &GroundTruth) -> String {
    let mut out = String::from("wallet,entity_id,type\n");
    for (wallet, entity) in &truth.entity_of {
        let kind = match truth.kind_of[entity] {
            EntityKind::Honest => "honest",
            EntityKind::Sybil => "sybil",
        };
        out.push_str(&format!("{wallet},{entity},{kind}\n"));
    }
    out
}

/// Parses the `wallet,entity_id,type` CSV back into a ground truth map.
pub fn parse_truth_csv(text: &str) -> Result<GroundTruth> {
    let mut entity_of = BTreeMap::new();
    let mut kind_of = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::InvalidParameter(format!(
                "truth line {} has {} fields, expected 3",
                i + 1,
                fields.len()
            )));
        }
        let entity: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad entity id on line {}", i + 1)))?;
        let kind = match fields[2].trim() {
            "honest" => EntityKind::Honest,
            "sybil" => EntityKind::Sybil,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown entity type {other:?} on line {}",
                    i + 1
                )))
            }
        };
        entity_of.insert(fields[0].trim().to_string(), entity);
        kind_of.insert(entity, kind);
    }
    Ok(GroundTruth { entity_of, kind_of })
}

/// Cluster-recovery quality, restricted to sybil wallets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScores {
    pub pairwise_precision: f64,
    pub pairwise_recall: f64,
    pub pairwise_f1: f64,
    pub adjusted_rand_index: f64,
    pub sybil_wallets: usize,
    pub true_pairs: usize,
    pub predicted_pairs: usize,
    pub matching_pairs: usize,
}

fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Pair-counting scores from co-labeled (truth, predicted) group ids.
fn score_partitions(labels: &[(usize, usize)]) -> RecoveryScores {
    let n = labels.len();
    let mut contingency: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut true_sizes: BTreeMap<usize, usize> = BTreeMap::new();
    let mut pred_sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for &(t, p) in labels {
        *contingency.entry((t, p)).or_insert(0) += 1;
        *true_sizes.entry(t).or_insert(0) += 1;
        *pred_sizes.entry(p).or_insert(0) += 1;
    }
    let matching: usize = contingency.values().map(|&c| pairs(c)).sum();
    let true_pairs: usize = true_sizes.values().map(|&c| pairs(c)).sum();
    let pred_pairs: usize = pred_sizes.values().map(|&c| pairs(c)).sum();

    let precision = if pred_pairs == 0 {
        1.0
    } else {
        matching as f64 / pred_pairs as f64
    };
    let recall = if true_pairs == 0 {
        1.0
    } else {
        matching as f64 / true_pairs as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };

    // Adjusted Rand index via pair counts.
    let ari = if n < 2 {
        1.0
    } else {
        let total = pairs(n) as f64;
        let expected = true_pairs as f64 * pred_pairs as f64 / total;
        let maximum = 0.5 * (true_pairs + pred_pairs) as f64;
        if (maximum - expected).abs() < 1e-12 {
            1.0
        } else {
            (matching as f64 - expected) / (maximum - expected)
        }
    };

    RecoveryScores {
        pairwise_precision: precision,
        pairwise_recall: recall,
        pairwise_f1: f1,
        adjusted_rand_index: ari,
        sybil_wallets: n,
        true_pairs,
        predicted_pairs: pred_pairs,
        matching_pairs: matching,
    }
}

/// Scores a predicted cluster set against the ground truth.
///
/// The graph supplies the node-id → wallet mapping the clusters are
/// expressed in. Only sybil wallets enter the comparison; a sybil wallet
/// outside every predicted cluster counts as its own singleton.
pub fn evaluate_recovery(
    predicted: &SybilClusterSet,
    truth: &GroundTruth,
    graph: &VotingGraph,
) -> Result<RecoveryScores> {
    let mut group_of_wallet: BTreeMap<&str, usize> = BTreeMap::new();
    let mut node_index: BTreeMap<usize, &crate::votegraph::VoterNode> = BTreeMap::new();
    for v in &graph.voters {
        node_index.insert(v.node_id, v);
    }
    for (ci, cluster) in predicted.clusters.iter().enumerate() {
        for &m in &cluster.members {
            let node = node_index.get(&m).ok_or_else(|| {
                Error::GraphInvariant(format!("cluster {ci} references unknown voter node {m}"))
            })?;
            for wallet in &node.wallet_addresses {
                group_of_wallet.insert(wallet.as_str(), ci);
            }
        }
    }

    let mut next_singleton = predicted.clusters.len();
    let labels: Vec<(usize, usize)> = truth
        .sybil_wallets()
        .into_iter()
        .map(|wallet| {
            let entity = truth.entity_of[wallet];
            let group = group_of_wallet.get(wallet).copied().unwrap_or_else(|| {
                let g = next_singleton;
                next_singleton += 1;
                g
            });
            (entity, group)
        })
        .collect();

    Ok(score_partitions(&labels))
}

/// ARI of a uniformly random assignment of the sybil wallets into
/// `cluster_count` groups — the chance-level baseline a real recovery must
/// beat.
pub fn random_clustering_ari(truth: &GroundTruth, cluster_count: usize, seed: u64) -> Result<f64> {
    if cluster_count == 0 {
        return Err(Error::InvalidParameter(
            "cluster_count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let labels: Vec<(usize, usize)> = truth
        .sybil_wallets()
        .into_iter()
        .map(|wallet| (truth.entity_of[wallet], rng.gen_range(0..cluster_count)))
        .collect();
    Ok(score_partitions(&labels).adjusted_rand_index)
}
