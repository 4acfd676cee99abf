//! Cluster filtering, label propagation over embedding neighbors, and graph
//! reduction by merging each surviving cluster into a single node.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::embedder::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numcore::Tensor;
use crate::sybil::index::{knn_search, FlatIndex};
use crate::sybil::kmeans::KMeansResult;
use crate::votegraph::{Identity, VoteEdge, VoterNode, VotingGraph};

/// Which filters to apply when normalizing raw k-means clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterFilterPolicy {
    /// Drop clusters of size 1.
    pub drop_singletons: bool,
    /// Drop clusters larger than mean + 1σ (computed over non-singleton
    /// cluster sizes).
    pub drop_oversized: bool,
}

impl Default for ClusterFilterPolicy {
    fn default() -> Self {
        Self {
            drop_singletons: true,
            drop_oversized: true,
        }
    }
}

/// The policy together with the statistics it computed on this input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub drop_singletons: bool,
    pub drop_oversized: bool,
    /// Mean and population σ of non-singleton cluster sizes.
    pub mean_size: f64,
    pub std_size: f64,
    /// mean + 1σ; clusters strictly above are dropped.
    pub size_threshold: f64,
}

/// One predicted sybil cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SybilCluster {
    /// Dense node ids of the member voters, ascending.
    pub members: Vec<usize>,
    /// Filled by label propagation.
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub total_clusters: usize,
    pub mean_size: f64,
    pub min_size: usize,
    pub max_size: usize,
}

/// Surviving clusters with the policy state that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SybilClusterSet {
    pub clusters: Vec<SybilCluster>,
    pub policy: PolicySnapshot,
    pub stats: ClusterStats,
}

impl SybilClusterSet {
    pub fn flagged_voters(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).sum()
    }

    /// Total node-count reduction a merge of these clusters produces.
    pub fn node_reduction(&self) -> usize {
        self.clusters
            .iter()
            .map(|c| c.members.len().saturating_sub(1))
            .sum()
    }
}

/// Applies the filter policy to raw k-means clusters.
///
/// `node_ids[i]` is the dense node id of point `i` in the k-means input.
/// Singletons are removed first; the mean+1σ threshold is then computed over
/// the remaining sizes, and clusters strictly above it are removed.
pub fn normalize_clusters(
    km: &KMeansResult,
    node_ids: &[usize],
    policy: ClusterFilterPolicy,
) -> Result<SybilClusterSet> {
    if km.assignments.len() != node_ids.len() {
        return Err(Error::Shape {
            op: "normalize_clusters",
            left: vec![km.assignments.len()],
            right: vec![node_ids.len()],
        });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); km.k];
    for (&cluster, &node) in km.assignments.iter().zip(node_ids) {
        members[cluster].push(node);
    }
    let mut clusters: Vec<Vec<usize>> = members.into_iter().filter(|m| !m.is_empty()).collect();
    if policy.drop_singletons {
        clusters.retain(|m| m.len() >= 2);
    }

    let sizes: Vec<f64> = clusters.iter().map(|m| m.len() as f64).collect();
    let (mean, std) = if sizes.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
        let var = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / sizes.len() as f64;
        (mean, var.sqrt())
    };
    let threshold = mean + std;
    if policy.drop_oversized {
        clusters.retain(|m| m.len() as f64 <= threshold);
    }

    for m in &mut clusters {
        m.sort_unstable();
    }
    clusters.sort(); // deterministic order by smallest member id

    let stats = ClusterStats {
        total_clusters: clusters.len(),
        mean_size: if clusters.is_empty() {
            0.0
        } else {
            clusters.iter().map(|m| m.len() as f64).sum::<f64>() / clusters.len() as f64
        },
        min_size: clusters.iter().map(Vec::len).min().unwrap_or(0),
        max_size: clusters.iter().map(Vec::len).max().unwrap_or(0),
    };

    Ok(SybilClusterSet {
        clusters: clusters
            .into_iter()
            .map(|members| SybilCluster {
                members,
                label: None,
            })
            .collect(),
        policy: PolicySnapshot {
            drop_singletons: policy.drop_singletons,
            drop_oversized: policy.drop_oversized,
            mean_size: mean,
            std_size: std,
            size_threshold: threshold,
        },
        stats,
    })
}

/// The voting graph with per-node propagated labels attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGraph {
    pub graph: VotingGraph,
    /// node id → propagated label, for every clustered node.
    pub propagated: BTreeMap<usize, String>,
}

/// Propagates a label onto every cluster: the most frequent Known name among
/// the members' `label_k` nearest Known-voter embedding neighbors, ties to
/// the lexicographically smallest name; clusters with no Known neighborhood
/// get a synthetic `sybil-cluster-<index>` label.
///
/// Node and edge counts are unchanged — only labels are added.
pub fn propagate_labels(
    graph: &VotingGraph,
    embeddings: &EmbeddingMatrix,
    clusters: &mut SybilClusterSet,
    label_k: usize,
) -> Result<SimilarityGraph> {
    if embeddings.node_count() != graph.node_count() {
        return Err(Error::Shape {
            op: "propagate_labels",
            left: vec![embeddings.node_count()],
            right: vec![graph.node_count()],
        });
    }
    let d = embeddings.dim();

    // Index the Known voters' embedding rows.
    let known: Vec<&VoterNode> = graph
        .voters
        .iter()
        .filter(|v| v.identity.is_known())
        .collect();
    let name_of: HashMap<usize, &str> = known
        .iter()
        .map(|v| {
            let Identity::Known(name) = &v.identity else {
                unreachable!("filtered to known voters");
            };
            (v.node_id, name.as_str())
        })
        .collect();
    let known_index = if known.is_empty() {
        None
    } else {
        let rows: Vec<f64> = known
            .iter()
            .flat_map(|v| embeddings.matrix.row(v.node_id).iter().copied())
            .collect();
        let ids: Vec<usize> = known.iter().map(|v| v.node_id).collect();
        Some(FlatIndex::build(
            Tensor::new(vec![known.len(), d], rows)?,
            ids,
        )?)
    };

    let mut propagated = BTreeMap::new();
    for (ci, cluster) in clusters.clusters.iter_mut().enumerate() {
        let label = match &known_index {
            Some(index) => {
                let k = label_k.min(index.len()).max(1);
                let queries: Vec<f64> = cluster
                    .members
                    .iter()
                    .flat_map(|&id| embeddings.matrix.row(id).iter().copied())
                    .collect();
                let queries = Tensor::new(vec![cluster.members.len(), d], queries)?;
                let (neighbor_ids, _) = knn_search(index, &queries, k)?;
                let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                for row in &neighbor_ids {
                    for id in row {
                        *counts.entry(name_of[id]).or_insert(0) += 1;
                    }
                }
                counts
                    .into_iter()
                    .max_by(|(na, ca), (nb, cb)| {
                        // Highest count wins; equal counts fall to the
                        // lexicographically smallest name.
                        ca.cmp(cb).then_with(|| nb.cmp(na))
                    })
                    .map(|(name, _)| name.to_string())
            }
            None => None,
        };
        let label = label.unwrap_or_else(|| format!("sybil-cluster-{ci}"));
        for &m in &cluster.members {
            propagated.insert(m, label.clone());
        }
        cluster.label = Some(label);
    }

    Ok(SimilarityGraph {
        graph: graph.clone(),
        propagated,
    })
}

/// The reduced graph plus the id remapping that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteredGraph {
    pub graph: VotingGraph,
    /// Original node id → node id in the reduced graph (every node mapped).
    pub merge_map: BTreeMap<usize, usize>,
    /// Reduced-graph node id → propagated label, for merged nodes.
    pub merged_labels: BTreeMap<usize, String>,
}

/// Merges every cluster into one voter node. Wallets union, powers and vote
/// counts sum, and each edge is retargeted to the merged endpoint, so the
/// edge multiset and total voting power are preserved exactly.
pub fn reduce_graph(
    similarity: &SimilarityGraph,
    clusters: &SybilClusterSet,
) -> Result<ClusteredGraph> {
    let original = &similarity.graph;
    let n = original.node_count();
    let slots = original.node_slots();

    // cluster index per original node, or usize::MAX.
    let mut cluster_of = vec![usize::MAX; n];
    for (ci, cluster) in clusters.clusters.iter().enumerate() {
        for &m in &cluster.members {
            if m >= n {
                return Err(Error::GraphInvariant(format!(
                    "cluster {ci} references node {m} outside the graph"
                )));
            }
            if !matches!(slots[m], crate::votegraph::NodeSlot::Voter(_)) {
                return Err(Error::GraphInvariant(format!(
                    "cluster {ci} references proposal node {m}"
                )));
            }
            if cluster_of[m] != usize::MAX {
                return Err(Error::GraphInvariant(format!(
                    "node {m} appears in clusters {} and {ci}",
                    cluster_of[m]
                )));
            }
            cluster_of[m] = ci;
        }
    }

    // New ids walk the original id order; a cluster takes the slot of its
    // first-seen member and later members are skipped.
    let mut merge_map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cluster_new_id: Vec<Option<usize>> = vec![None; clusters.clusters.len()];
    let mut next_id = 0usize;
    for id in 0..n {
        let ci = cluster_of[id];
        if ci == usize::MAX {
            merge_map.insert(id, next_id);
            next_id += 1;
        } else if let Some(existing) = cluster_new_id[ci] {
            merge_map.insert(id, existing);
        } else {
            cluster_new_id[ci] = Some(next_id);
            merge_map.insert(id, next_id);
            next_id += 1;
        }
    }

    let mut voters: Vec<VoterNode> = Vec::with_capacity(original.voters.len());
    let mut merged_nodes: HashMap<usize, usize> = HashMap::new(); // new id → voters index
    let mut label_index = BTreeMap::new();
    let mut proposals = Vec::with_capacity(original.proposals.len());
    let mut merged_labels = BTreeMap::new();

    for id in 0..n {
        let new_id = merge_map[&id];
        let ci = cluster_of[id];
        match slots[id] {
            crate::votegraph::NodeSlot::Voter(vi) => {
                let v = &original.voters[vi];
                if ci == usize::MAX {
                    if let Identity::Known(name) = &v.identity {
                        label_index.insert(name.clone(), new_id);
                    }
                    voters.push(VoterNode {
                        node_id: new_id,
                        ..v.clone()
                    });
                } else if let Some(&existing) = merged_nodes.get(&new_id) {
                    let merged: &mut VoterNode = &mut voters[existing];
                    merged
                        .wallet_addresses
                        .extend(v.wallet_addresses.iter().cloned());
                    merged.total_power += v.total_power;
                    merged.vote_count += v.vote_count;
                } else {
                    // First member starts the merged node. The merged entity
                    // is still anonymous: the propagated label is attached
                    // alongside, not promoted to a Known identity.
                    merged_nodes.insert(new_id, voters.len());
                    if let Some(label) = &clusters.clusters[ci].label {
                        merged_labels.insert(new_id, label.clone());
                    }
                    voters.push(VoterNode {
                        node_id: new_id,
                        identity: Identity::Unknown,
                        wallet_addresses: v.wallet_addresses.clone(),
                        total_power: v.total_power,
                        vote_count: v.vote_count,
                    });
                }
            }
            crate::votegraph::NodeSlot::Proposal(pi) => {
                let p = &original.proposals[pi];
                proposals.push(crate::votegraph::ProposalNode {
                    node_id: new_id,
                    ..p.clone()
                });
            }
        }
    }

    let edges: Vec<VoteEdge> = original
        .edges
        .iter()
        .map(|e| VoteEdge {
            voter: merge_map[&e.voter],
            proposal: merge_map[&e.proposal],
            ..*e
        })
        .collect();

    let graph = VotingGraph {
        voters,
        proposals,
        edges,
        label_index,
    };
    graph.validate()?;

    Ok(ClusteredGraph {
        graph,
        merge_map,
        merged_labels,
    })
}
