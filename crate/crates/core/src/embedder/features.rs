//! Node features, temporal sequences, and split masks derived from the
//! voting graph.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::embedder::TrainConfig;
use crate::error::{Error, Result};
use crate::numcore::Tensor;
use crate::votegraph::{NodeSlot, VotingGraph};

/// Number of engineered per-node feature columns.
pub const NODE_FEATURES: usize = 8;

/// Per-event features in a temporal sequence: Δt (days), log1p(power), choice.
pub const SEQ_FEATURES: usize = 3;

const SECONDS_PER_DAY: f64 = 86_400.0;

/// Everything the model consumes: features, graph structure, and masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    /// `[n, NODE_FEATURES]`, z-scored per column.
    pub node_features: Tensor,
    /// (voter id, proposal id) per vote, parallel entries included.
    pub edge_index: Vec<(usize, usize)>,
    /// Voting power per edge, aligned with `edge_index`.
    pub edge_power: Vec<f64>,
    /// `[n, T, SEQ_FEATURES]`, front-padded with zeros.
    pub temporal_sequences: Tensor,
    /// Per-node split masks; true only on voter nodes, mutually disjoint,
    /// together covering every voter.
    pub train_mask: Vec<bool>,
    pub val_mask: Vec<bool>,
    pub test_mask: Vec<bool>,
}

impl FeatureSet {
    pub fn node_count(&self) -> usize {
        self.node_features.shape()[0]
    }

    pub fn seq_len(&self) -> usize {
        self.temporal_sequences.shape()[1]
    }
}

/// Raw (pre-normalization) feature matrix. Column order:
/// log1p(degree), log1p(total power), log1p(vote count), activity span in
/// days, mean inter-event gap in days, distinct spaces, is-proposal flag,
/// is-known flag.
pub fn raw_node_features(graph: &VotingGraph) -> Tensor {
    let n = graph.node_count();
    let slots = graph.node_slots();

    let mut degree = vec![0usize; n];
    let mut power = vec![0.0f64; n];
    let mut events: Vec<Vec<i64>> = vec![Vec::new(); n];
    let mut spaces: Vec<std::collections::BTreeSet<&str>> = vec![Default::default(); n];
    for e in &graph.edges {
        degree[e.voter] += 1;
        degree[e.proposal] += 1;
        power[e.voter] += e.voting_power;
        power[e.proposal] += e.voting_power;
        events[e.voter].push(e.timestamp);
        events[e.proposal].push(e.timestamp);
    }
    for e in &graph.edges {
        if let NodeSlot::Proposal(pi) = slots[e.proposal] {
            let space = graph.proposals[pi].space_id.as_str();
            spaces[e.voter].insert(space);
            spaces[e.proposal].insert(space);
        }
    }

    let mut rows = Vec::with_capacity(n);
    for id in 0..n {
        let ts = &mut events[id];
        ts.sort_unstable();
        let span_days = match (ts.first(), ts.last()) {
            (Some(&a), Some(&b)) if ts.len() >= 2 => (b - a) as f64 / SECONDS_PER_DAY,
            _ => 0.0,
        };
        let mean_gap_days = if ts.len() >= 2 {
            let total: i64 = ts.windows(2).map(|w| w[1] - w[0]).sum();
            total as f64 / (ts.len() - 1) as f64 / SECONDS_PER_DAY
        } else {
            0.0
        };
        let (vote_count, is_proposal, is_known) = match slots[id] {
            NodeSlot::Voter(vi) => {
                let v = &graph.voters[vi];
                (v.vote_count, 0.0, if v.identity.is_known() { 1.0 } else { 0.0 })
            }
            NodeSlot::Proposal(_) => (ts.len(), 1.0, 0.0),
        };
        rows.push(vec![
            (1.0 + degree[id] as f64).ln(),
            (1.0 + power[id]).ln(),
            (1.0 + vote_count as f64).ln(),
            span_days,
            mean_gap_days,
            spaces[id].len() as f64,
            is_proposal,
            is_known,
        ]);
    }
    Tensor::from_rows(&rows)
}

/// Z-scores each column in place; constant columns become all zeros.
fn z_score_columns(m: &mut Tensor) {
    let (n, c) = (m.shape()[0], m.shape()[1]);
    for j in 0..c {
        let mean = (0..n).map(|i| m.get2(i, j)).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (m.get2(i, j) - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        for i in 0..n {
            let v = if std < 1e-12 {
                0.0
            } else {
                (m.get2(i, j) - mean) / std
            };
            m.set2(i, j, v);
        }
    }
}

/// Builds the full model input from the graph.
pub fn engineer_features(graph: &VotingGraph, config: &TrainConfig) -> Result<FeatureSet> {
    if graph.node_count() == 0 {
        return Err(Error::InvalidParameter(
            "cannot engineer features for an empty graph".into(),
        ));
    }
    config.validate()?;
    let n = graph.node_count();
    let slots = graph.node_slots();

    let mut node_features = raw_node_features(graph);
    z_score_columns(&mut node_features);

    let edge_index: Vec<(usize, usize)> = graph.edges.iter().map(|e| (e.voter, e.proposal)).collect();
    let edge_power: Vec<f64> = graph.edges.iter().map(|e| e.voting_power).collect();

    // Last T vote events per voter node as (Δt days, log1p(power), choice),
    // zero-padded at the front. Proposal nodes keep all-zero sequences.
    let t_len = config.seq_len;
    let mut seq = Tensor::zeros(&[n, t_len, SEQ_FEATURES]);
    let mut per_voter: Vec<Vec<(i64, f64, i64)>> = vec![Vec::new(); n];
    for e in &graph.edges {
        per_voter[e.voter].push((e.timestamp, e.voting_power, e.choice));
    }
    for id in 0..n {
        if !matches!(slots[id], NodeSlot::Voter(_)) {
            continue;
        }
        let evs = &mut per_voter[id];
        evs.sort_unstable_by_key(|&(ts, _, choice)| (ts, choice));
        let tail_start = evs.len().saturating_sub(t_len);
        let tail = &evs[tail_start..];
        let pad = t_len - tail.len();
        for (k, &(ts, pw, choice)) in tail.iter().enumerate() {
            let dt_days = if k == 0 {
                0.0
            } else {
                (ts - tail[k - 1].0) as f64 / SECONDS_PER_DAY
            };
            let step = pad + k;
            let base = (id * t_len + step) * SEQ_FEATURES;
            seq.data_mut()[base] = dt_days;
            seq.data_mut()[base + 1] = (1.0 + pw).ln();
            seq.data_mut()[base + 2] = choice as f64;
        }
    }

    // Seeded shuffle of voter ids, then contiguous split.
    let mut voter_ids: Vec<usize> = graph.voters.iter().map(|v| v.node_id).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    voter_ids.shuffle(&mut rng);
    let nv = voter_ids.len();
    let mut n_train = (nv as f64 * config.split.0).round() as usize;
    let mut n_val = (nv as f64 * config.split.1).round() as usize;
    if n_train == 0 && nv > 0 {
        n_train = 1;
    }
    n_train = n_train.min(nv);
    n_val = n_val.min(nv - n_train);

    let mut train_mask = vec![false; n];
    let mut val_mask = vec![false; n];
    let mut test_mask = vec![false; n];
    for (i, &id) in voter_ids.iter().enumerate() {
        if i < n_train {
            train_mask[id] = true;
        } else if i < n_train + n_val {
            val_mask[id] = true;
        } else {
            test_mask[id] = true;
        }
    }

    Ok(FeatureSet {
        node_features,
        edge_index,
        edge_power,
        temporal_sequences: seq,
        train_mask,
        val_mask,
        test_mask,
    })
}
