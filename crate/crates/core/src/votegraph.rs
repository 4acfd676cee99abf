//! Bipartite voting multigraph: wallet-reuse merging, known-voter labels,
//! and sociometric statistics (density, degrees, centralities).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::VoteRecord;

/// Whether a voter node is tied to a persistent public name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Identity {
    /// Persistent name (ENS-style) from the registry.
    Known(String),
    Unknown,
}

impl Identity {
    pub fn is_known(&self) -> bool {
        matches!(self, Identity::Known(_))
    }
}

/// One voter: possibly many wallets merged behind one identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterNode {
    pub node_id: usize,
    pub identity: Identity,
    pub wallet_addresses: BTreeSet<String>,
    pub total_power: f64,
    pub vote_count: usize,
}

/// One governance proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalNode {
    pub node_id: usize,
    pub proposal_id: String,
    pub space_id: String,
}

/// One vote: a directed attribute-carrying edge voter → proposal.
/// Parallel edges between the same pair are preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteEdge {
    pub voter: usize,
    pub proposal: usize,
    pub voting_power: f64,
    pub timestamp: i64,
    pub choice: i64,
}

/// The bipartite voting multigraph. Node ids are dense over
/// `0..(voters.len() + proposals.len())`, assigned by first appearance in
/// the time-ordered vote stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VotingGraph {
    pub voters: Vec<VoterNode>,
    pub proposals: Vec<ProposalNode>,
    pub edges: Vec<VoteEdge>,
    /// Persistent name → voter node id.
    pub label_index: BTreeMap<String, usize>,
}

/// Which partition a dense node id belongs to, with the index into that
/// partition's vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSlot {
    Voter(usize),
    Proposal(usize),
}

impl VotingGraph {
    pub fn node_count(&self) -> usize {
        self.voters.len() + self.proposals.len()
    }

    pub fn known_voter_count(&self) -> usize {
        self.voters.iter().filter(|v| v.identity.is_known()).count()
    }

    pub fn unknown_voter_count(&self) -> usize {
        self.voters.len() - self.known_voter_count()
    }

    /// Dense id → partition lookup table.
    pub fn node_slots(&self) -> Vec<NodeSlot> {
        let mut slots = vec![NodeSlot::Voter(usize::MAX); self.node_count()];
        for (i, v) in self.voters.iter().enumerate() {
            slots[v.node_id] = NodeSlot::Voter(i);
        }
        for (i, p) in self.proposals.iter().enumerate() {
            slots[p.node_id] = NodeSlot::Proposal(i);
        }
        slots
    }

    /// Deduplicated undirected neighbor lists over the dense id space,
    /// each list ascending.
    pub fn simple_adjacency(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.node_count()];
        for e in &self.edges {
            sets[e.voter].insert(e.proposal);
            sets[e.proposal].insert(e.voter);
        }
        sets.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Checks every structural invariant; used when loading a cached graph.
    pub fn validate(&self) -> Result<()> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut is_voter = vec![false; n];
        for v in &self.voters {
            if v.node_id >= n || seen[v.node_id] {
                return Err(Error::GraphInvariant(format!(
                    "voter node id {} duplicate or out of range",
                    v.node_id
                )));
            }
            seen[v.node_id] = true;
            is_voter[v.node_id] = true;
            if v.wallet_addresses.is_empty() {
                return Err(Error::GraphInvariant(format!(
                    "voter {} has no wallet addresses",
                    v.node_id
                )));
            }
            if let Identity::Known(name) = &v.identity {
                if name.is_empty() {
                    return Err(Error::GraphInvariant(format!(
                        "voter {} marked known with empty name",
                        v.node_id
                    )));
                }
            }
        }
        for p in &self.proposals {
            if p.node_id >= n || seen[p.node_id] {
                return Err(Error::GraphInvariant(format!(
                    "proposal node id {} duplicate or out of range",
                    p.node_id
                )));
            }
            seen[p.node_id] = true;
        }

        let mut prop_ids = HashSet::new();
        for p in &self.proposals {
            if !prop_ids.insert(&p.proposal_id) {
                return Err(Error::GraphInvariant(format!(
                    "proposal id {} appears on two nodes",
                    p.proposal_id
                )));
            }
        }

        let mut vote_counts = vec![0usize; n];
        let mut power_sums = vec![0.0f64; n];
        for e in &self.edges {
            if e.voter >= n || e.proposal >= n || !is_voter[e.voter] || is_voter[e.proposal] {
                return Err(Error::GraphInvariant(format!(
                    "edge {} -> {} does not join a voter to a proposal",
                    e.voter, e.proposal
                )));
            }
            if e.voting_power < 0.0 || !e.voting_power.is_finite() {
                return Err(Error::GraphInvariant(format!(
                    "edge {} -> {} has invalid power {}",
                    e.voter, e.proposal, e.voting_power
                )));
            }
            vote_counts[e.voter] += 1;
            power_sums[e.voter] += e.voting_power;
        }
        for v in &self.voters {
            if v.vote_count != vote_counts[v.node_id] {
                return Err(Error::GraphInvariant(format!(
                    "voter {} vote_count {} != incident edges {}",
                    v.node_id, v.vote_count, vote_counts[v.node_id]
                )));
            }
            let expect = power_sums[v.node_id];
            let scale = expect.abs().max(v.total_power.abs()).max(1.0);
            if (v.total_power - expect).abs() / scale > 1e-9 {
                return Err(Error::GraphInvariant(format!(
                    "voter {} total_power {} != edge sum {}",
                    v.node_id, v.total_power, expect
                )));
            }
        }

        for (name, &id) in &self.label_index {
            let ok = self
                .voters
                .iter()
                .any(|v| v.node_id == id && v.identity == Identity::Known(name.clone()));
            if !ok {
                return Err(Error::GraphInvariant(format!(
                    "label index entry {name} -> {id} does not match a known voter"
                )));
            }
        }
        let known = self.known_voter_count();
        if self.label_index.len() != known {
            return Err(Error::GraphInvariant(format!(
                "label index has {} entries but graph has {known} known voters",
                self.label_index.len()
            )));
        }
        Ok(())
    }
}

/// Parses the registry CSV (`address,name`), lower-casing addresses.
/// Conflicts are *not* resolved here; [`build_voting_graph`] reports them.
pub fn parse_registry(input: impl Read) -> Result<Vec<(String, String)>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in reader.deserialize::<(String, String)>() {
        let (addr, name) = row?;
        out.push((addr.trim().to_lowercase(), name.trim().to_string()));
    }
    Ok(out)
}

/// Builds the graph from time-ordered votes and an address → persistent-name
/// registry.
///
/// Merging: all votes from one address share a node; all registry addresses
/// under one name share a Known node. Registry names that never vote still
/// get (isolated) nodes, appended after the stream-ordered ids in name order.
pub fn build_voting_graph(
    votes: &[VoteRecord],
    registry: &[(String, String)],
) -> Result<VotingGraph> {
    // An address bound to two persistent names is unresolvable.
    let mut name_of: HashMap<&str, &str> = HashMap::new();
    for (addr, name) in registry {
        if let Some(prev) = name_of.insert(addr, name) {
            if prev != name {
                return Err(Error::RegistryConflict {
                    address: addr.clone(),
                    first: prev.to_string(),
                    second: name.clone(),
                });
            }
        }
    }

    let mut graph = VotingGraph::default();
    let mut node_for_address: HashMap<String, usize> = HashMap::new();
    let mut node_for_name: HashMap<String, usize> = HashMap::new();
    let mut node_for_proposal: HashMap<String, usize> = HashMap::new();
    let mut next_id = 0usize;

    for vote in votes {
        let addr = vote.voter_address.as_str();
        let voter_idx = match name_of.get(addr) {
            Some(&name) => match node_for_name.get(name) {
                Some(&idx) => idx,
                None => {
                    let idx = graph.voters.len();
                    graph.voters.push(VoterNode {
                        node_id: next_id,
                        identity: Identity::Known(name.to_string()),
                        wallet_addresses: BTreeSet::new(),
                        total_power: 0.0,
                        vote_count: 0,
                    });
                    graph.label_index.insert(name.to_string(), next_id);
                    node_for_name.insert(name.to_string(), idx);
                    next_id += 1;
                    idx
                }
            },
            None => match node_for_address.get(addr) {
                Some(&idx) => idx,
                None => {
                    let idx = graph.voters.len();
                    graph.voters.push(VoterNode {
                        node_id: next_id,
                        identity: Identity::Unknown,
                        wallet_addresses: BTreeSet::new(),
                        total_power: 0.0,
                        vote_count: 0,
                    });
                    node_for_address.insert(addr.to_string(), idx);
                    next_id += 1;
                    idx
                }
            },
        };

        let prop_idx = match node_for_proposal.get(&vote.proposal_id) {
            Some(&idx) => idx,
            None => {
                let idx = graph.proposals.len();
                graph.proposals.push(ProposalNode {
                    node_id: next_id,
                    proposal_id: vote.proposal_id.clone(),
                    space_id: vote.space_id.clone(),
                });
                node_for_proposal.insert(vote.proposal_id.clone(), idx);
                next_id += 1;
                idx
            }
        };

        let voter = &mut graph.voters[voter_idx];
        voter.wallet_addresses.insert(addr.to_string());
        voter.total_power += vote.voting_power;
        voter.vote_count += 1;
        graph.edges.push(VoteEdge {
            voter: voter.node_id,
            proposal: graph.proposals[prop_idx].node_id,
            voting_power: vote.voting_power,
            timestamp: vote.timestamp,
            choice: vote.choice,
        });
    }

    // Registry identities that never voted still exist as (isolated) nodes;
    // appended in name order so ids stay deterministic.
    let mut by_name: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (addr, name) in registry {
        by_name.entry(name).or_default().push(addr);
    }
    for (name, addrs) in by_name {
        let idx = match node_for_name.get(name) {
            Some(&idx) => idx,
            None => {
                let idx = graph.voters.len();
                graph.voters.push(VoterNode {
                    node_id: next_id,
                    identity: Identity::Known(name.to_string()),
                    wallet_addresses: BTreeSet::new(),
                    total_power: 0.0,
                    vote_count: 0,
                });
                graph.label_index.insert(name.to_string(), next_id);
                node_for_name.insert(name.to_string(), idx);
                next_id += 1;
                idx
            }
        };
        for addr in addrs {
            graph.voters[idx].wallet_addresses.insert(addr.to_string());
        }
    }

    Ok(graph)
}

// ---------------------------------------------------------------------------
// Sociometrics
// ---------------------------------------------------------------------------

/// How many nodes the centrality top-lists keep.
pub const TOP_CENTRALITY: usize = 10;

/// Graph-level statistics for the stats stage and the final report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub voter_count: usize,
    pub proposal_count: usize,
    pub edge_count: usize,
    /// Distinct voter–proposal pairs.
    pub simple_edge_count: usize,
    /// Simple edges over the bipartite maximum `voters * proposals`.
    pub density: f64,
    pub known_voters: usize,
    pub unknown_voters: usize,
    /// (multigraph degree, node count), ascending by degree.
    pub degree_histogram: Vec<(usize, usize)>,
    /// (node id, score), descending, ties by id.
    pub top_betweenness: Vec<(usize, f64)>,
    pub top_eigenvector: Vec<(usize, f64)>,
}

/// Computes density, degree distribution, and exact centralities.
pub fn sociometrics(graph: &VotingGraph) -> StatsReport {
    let n = graph.node_count();
    let adj = graph.simple_adjacency();
    let simple_edge_count = adj.iter().map(Vec::len).sum::<usize>() / 2;

    let pairs = graph.voters.len() * graph.proposals.len();
    let density = if pairs == 0 {
        0.0
    } else {
        simple_edge_count as f64 / pairs as f64
    };

    let mut multi_degree = vec![0usize; n];
    for e in &graph.edges {
        multi_degree[e.voter] += 1;
        multi_degree[e.proposal] += 1;
    }
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for &d in &multi_degree {
        *hist.entry(d).or_insert(0) += 1;
    }

    let betweenness = brandes_betweenness(&adj);
    let eigenvector = eigenvector_centrality(&adj, 1e-8, 1000);

    StatsReport {
        voter_count: graph.voters.len(),
        proposal_count: graph.proposals.len(),
        edge_count: graph.edges.len(),
        simple_edge_count,
        density,
        known_voters: graph.known_voter_count(),
        unknown_voters: graph.unknown_voter_count(),
        degree_histogram: hist.into_iter().collect(),
        top_betweenness: top_k(&betweenness, TOP_CENTRALITY),
        top_eigenvector: top_k(&eigenvector, TOP_CENTRALITY),
    }
}

fn top_k(scores: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut indexed: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
    indexed.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    indexed.truncate(k);
    indexed
}

/// Exact betweenness centrality on an unweighted undirected simple graph
/// (accumulation over breadth-first shortest-path DAGs; each undirected pair
/// counted once).
pub fn brandes_betweenness(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut centrality = vec![0.0f64; n];
    let mut stack: Vec<usize> = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![-1i64; n];
    let mut delta = vec![0.0f64; n];
    let mut queue = std::collections::VecDeque::new();

    for s in 0..n {
        stack.clear();
        for v in 0..n {
            preds[v].clear();
            sigma[v] = 0.0;
            dist[v] = -1;
            delta[v] = 0.0;
        }
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                centrality[w] += delta[w];
            }
        }
    }
    // Each unordered pair was counted from both endpoints.
    for c in &mut centrality {
        *c /= 2.0;
    }
    centrality
}

/// Eigenvector centrality by power iteration on A + I. The identity shift
/// leaves the eigenvectors unchanged while breaking the period-2 oscillation
/// a bipartite adjacency would otherwise exhibit.
pub fn eigenvector_centrality(adj: &[Vec<usize>], tol: f64, max_iters: usize) -> Vec<f64> {
    let n = adj.len();
    if n == 0 {
        return Vec::new();
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0f64; n];
    for _ in 0..max_iters {
        for v in 0..n {
            let mut acc = x[v]; // the +I term
            for &w in &adj[v] {
                acc += x[w];
            }
            next[v] = acc;
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return next;
        }
        for v in &mut next {
            *v /= norm;
        }
        let diff = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        std::mem::swap(&mut x, &mut next);
        if diff < tol {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vote(addr: &str, prop: &str, ts: i64, power: f64) -> VoteRecord {
        VoteRecord {
            voter_address: addr.into(),
            proposal_id: prop.into(),
            space_id: "dao".into(),
            voting_power: power,
            timestamp: ts,
            choice: 1,
        }
    }

    #[test]
    fn single_address_three_proposals() {
        let votes = vec![
            vote("0xa", "p1", 1, 1.0),
            vote("0xa", "p2", 2, 2.0),
            vote("0xa", "p3", 3, 3.0),
        ];
        let g = build_voting_graph(&votes, &[]).unwrap();
        assert_eq!(g.voters.len(), 1);
        assert_eq!(g.proposals.len(), 3);
        assert_eq!(g.edges.len(), 3);
        assert_eq!(g.voters[0].identity, Identity::Unknown);
        assert_eq!(g.voters[0].vote_count, 3);
        assert_eq!(g.voters[0].total_power, 6.0);
        g.validate().unwrap();
    }

    #[test]
    fn registry_merges_two_addresses_into_one_known_node() {
        let votes = vec![vote("0xa", "p1", 1, 1.0), vote("0xb", "p2", 2, 1.0)];
        let registry = vec![
            ("0xa".to_string(), "alice".to_string()),
            ("0xb".to_string(), "alice".to_string()),
        ];
        let g = build_voting_graph(&votes, &registry).unwrap();
        assert_eq!(g.voters.len(), 1);
        let v = &g.voters[0];
        assert_eq!(v.identity, Identity::Known("alice".into()));
        assert_eq!(v.wallet_addresses.len(), 2);
        assert_eq!(v.vote_count, 2);
        assert_eq!(g.label_index.get("alice"), Some(&v.node_id));
        g.validate().unwrap();
    }

    #[test]
    fn empty_votes_empty_graph() {
        let g = build_voting_graph(&[], &[]).unwrap();
        assert_eq!(g.node_count(), 0);
        assert!(g.edges.is_empty());
        g.validate().unwrap();
    }

    #[test]
    fn registry_conflict_is_fatal() {
        let registry = vec![
            ("0xa".to_string(), "alice".to_string()),
            ("0xa".to_string(), "bob".to_string()),
        ];
        match build_voting_graph(&[], &registry) {
            Err(Error::RegistryConflict { address, .. }) => assert_eq!(address, "0xa"),
            other => panic!("expected registry conflict, got {other:?}"),
        }
    }

    #[test]
    fn unregistered_known_voter_wallet_stays_separate() {
        // Only registry and shared-address evidence merge.
        let votes = vec![vote("0xa", "p1", 1, 1.0), vote("0xb", "p1", 2, 1.0)];
        let registry = vec![("0xa".to_string(), "alice".to_string())];
        let g = build_voting_graph(&votes, &registry).unwrap();
        assert_eq!(g.voters.len(), 2);
        assert_eq!(g.known_voter_count(), 1);
        assert_eq!(g.unknown_voter_count(), 1);
    }

    #[test]
    fn rebuild_is_deterministic() {
        let votes = vec![
            vote("0xc", "p2", 1, 1.0),
            vote("0xa", "p1", 2, 2.0),
            vote("0xc", "p1", 3, 0.5),
        ];
        let registry = vec![("0xa".to_string(), "alice".to_string())];
        let g1 = build_voting_graph(&votes, &registry).unwrap();
        let g2 = build_voting_graph(&votes, &registry).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn edge_count_and_vote_counts_match() {
        let votes = vec![
            vote("0xa", "p1", 1, 1.0),
            vote("0xa", "p1", 2, 1.0), // parallel edge kept
            vote("0xb", "p1", 3, 1.0),
        ];
        let g = build_voting_graph(&votes, &[]).unwrap();
        assert_eq!(g.edges.len(), 3);
        let total: usize = g.voters.iter().map(|v| v.vote_count).sum();
        assert_eq!(total, g.edges.len());
        // Parallel edges do not create extra simple edges.
        let report = sociometrics(&g);
        assert_eq!(report.simple_edge_count, 2);
        assert_eq!(report.edge_count, 3);
    }

    #[test]
    fn path_graph_density_and_betweenness() {
        // voter — proposal — voter
        let votes = vec![vote("0xa", "p1", 1, 1.0), vote("0xb", "p1", 2, 1.0)];
        let g = build_voting_graph(&votes, &[]).unwrap();
        let report = sociometrics(&g);
        assert_eq!(report.density, 1.0); // 2 simple edges / (2 voters * 1 proposal)

        // Only the middle (proposal) node lies on a shortest path.
        let prop_id = g.proposals[0].node_id;
        let b: std::collections::HashMap<usize, f64> =
            report.top_betweenness.iter().copied().collect();
        assert_eq!(b[&prop_id], 1.0);
        for v in &g.voters {
            assert_eq!(b[&v.node_id], 0.0);
        }
    }

    #[test]
    fn star_degrees_and_eigenvector() {
        let votes = vec![
            vote("0xa", "p1", 1, 1.0),
            vote("0xb", "p1", 2, 1.0),
            vote("0xc", "p1", 3, 1.0),
            vote("0xd", "p1", 4, 1.0),
        ];
        let g = build_voting_graph(&votes, &[]).unwrap();
        let report = sociometrics(&g);
        // All voters degree 1, proposal degree 4.
        assert_eq!(report.degree_histogram, vec![(1, 4), (4, 1)]);
        let sum: usize = report
            .degree_histogram
            .iter()
            .map(|(d, c)| d * c)
            .sum();
        assert_eq!(sum, 2 * g.edges.len());
        // The hub dominates eigenvector centrality.
        let (top_node, top_score) = report.top_eigenvector[0];
        assert_eq!(top_node, g.proposals[0].node_id);
        assert!(top_score > report.top_eigenvector[1].1);
    }

    #[test]
    fn empty_graph_metrics_are_empty() {
        let g = VotingGraph::default();
        let report = sociometrics(&g);
        assert_eq!(report.density, 0.0);
        assert!(report.top_eigenvector.is_empty());
        assert!(report.top_betweenness.is_empty());
        assert!(report.degree_histogram.is_empty());
    }

    #[test]
    fn validate_rejects_corrupt_edge() {
        let votes = vec![vote("0xa", "p1", 1, 1.0)];
        let mut g = build_voting_graph(&votes, &[]).unwrap();
        g.edges[0].proposal = 99;
        assert!(matches!(g.validate(), Err(Error::GraphInvariant(_))));
    }

    #[test]
    fn validate_rejects_wrong_vote_count() {
        let votes = vec![vote("0xa", "p1", 1, 1.0)];
        let mut g = build_voting_graph(&votes, &[]).unwrap();
        g.voters[0].vote_count = 5;
        assert!(matches!(g.validate(), Err(Error::GraphInvariant(_))));
    }

    #[test]
    fn registry_only_name_becomes_isolated_known_node() {
        let votes = vec![vote("0xa", "p1", 1, 1.0)];
        let registry = vec![("0xffff".to_string(), "zed".to_string())];
        let g = build_voting_graph(&votes, &registry).unwrap();
        assert_eq!(g.voters.len(), 2);
        let zed = g.voters.iter().find(|v| v.identity == Identity::Known("zed".into())).unwrap();
        assert_eq!(zed.vote_count, 0);
        assert!(zed.wallet_addresses.contains("0xffff"));
        g.validate().unwrap();
    }

    #[test]
    fn betweenness_on_longer_path() {
        // a — p1 — b — p2 — c : interior nodes carry all shortest paths.
        let votes = vec![
            vote("0xa", "p1", 1, 1.0),
            vote("0xb", "p1", 2, 1.0),
            vote("0xb", "p2", 3, 1.0),
            vote("0xc", "p2", 4, 1.0),
        ];
        let g = build_voting_graph(&votes, &[]).unwrap();
        let adj = g.simple_adjacency();
        let b = brandes_betweenness(&adj);
        // Path of 5 nodes v0,p0,v1,p1,v2 in id order 0,1,2,3,4:
        // standard path-graph betweenness is [0, 3, 4, 3, 0].
        assert_eq!(b, vec![0.0, 3.0, 4.0, 3.0, 0.0]);
    }
}
