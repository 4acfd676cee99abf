//! Summary report over a full identification run: dataset window, graph
//! sizes before and after reduction, and cluster tallies, with plain-text
//! and CSV renderings.

use chrono::{TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::ingest::DatasetWindow;
use crate::sybil::clusters::{ClusteredGraph, SimilarityGraph, SybilClusterSet};
use crate::votegraph::VotingGraph;

/// Node/edge tally for one graph stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSize {
    pub nodes: usize,
    pub edges: usize,
}

impl GraphSize {
    fn of(graph: &VotingGraph) -> Self {
        Self {
            nodes: graph.node_count(),
            edges: graph.edges.len(),
        }
    }
}

/// How much smaller merging made the graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeReduction {
    /// Nodes removed by merging: Σ (cluster size − 1).
    pub nodes_removed: usize,
    /// Voters absorbed into merged nodes: Σ cluster size.
    pub sybils_clustered: usize,
    /// `nodes_removed` as a percentage of the original node count.
    pub percent: f64,
}

/// Span of the analyzed dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    /// Unix seconds of the earliest vote.
    pub start: i64,
    /// Unix seconds of the latest vote.
    pub end: i64,
    pub duration_days: i64,
}

/// Headline numbers for one identification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub date_range: DateRange,
    pub original_graph: GraphSize,
    pub similarity_graph: GraphSize,
    pub clustered_graph: GraphSize,
    pub known_voters: usize,
    pub unknown_voters: usize,
    pub potential_sybils_identified: usize,
    pub sybil_clusters_formed: usize,
    pub node_reduction: NodeReduction,
}

/// Assembles the report from the three graph stages and the cluster set.
pub fn sociometric_report(
    original: &VotingGraph,
    similarity: &SimilarityGraph,
    clustered: &ClusteredGraph,
    clusters: &SybilClusterSet,
    window: &DatasetWindow,
) -> Report {
    let original_size = GraphSize::of(original);
    let nodes_removed = clusters.node_reduction();
    let percent = if original_size.nodes == 0 {
        0.0
    } else {
        100.0 * nodes_removed as f64 / original_size.nodes as f64
    };
    Report {
        date_range: DateRange {
            start: window.start_date,
            end: window.end_date,
            duration_days: (window.end_date - window.start_date) / 86_400,
        },
        original_graph: original_size,
        similarity_graph: GraphSize::of(&similarity.graph),
        clustered_graph: GraphSize::of(&clustered.graph),
        known_voters: original.known_voter_count(),
        unknown_voters: original.unknown_voter_count(),
        potential_sybils_identified: clusters.flagged_voters(),
        sybil_clusters_formed: clusters.clusters.len(),
        node_reduction: NodeReduction {
            nodes_removed,
            sybils_clustered: clusters.flagged_voters(),
            percent,
        },
    }
}

fn date_of(epoch: i64) -> String {
    match Utc.timestamp_opt(epoch, 0).single() {
        Some(t) => t.format("%Y-%m-%d").to_string(),
        None => format!("epoch {epoch}"),
    }
}

/// Renders the report as an aligned label/value table.
pub fn render_report_text(report: &Report) -> String {
    let rows: Vec<(&str, String)> = vec![
        ("Start Date", date_of(report.date_range.start)),
        ("End Date", date_of(report.date_range.end)),
        (
            "Duration",
            format!("{} days", report.date_range.duration_days),
        ),
        (
            "Original Graph",
            format!(
                "{} nodes, {} edges",
                report.original_graph.nodes, report.original_graph.edges
            ),
        ),
        (
            "Similarity Graph",
            format!(
                "{} nodes, {} edges",
                report.similarity_graph.nodes, report.similarity_graph.edges
            ),
        ),
        (
            "Clustered Graph",
            format!(
                "{} nodes, {} edges",
                report.clustered_graph.nodes, report.clustered_graph.edges
            ),
        ),
        ("Number of Known Voters", report.known_voters.to_string()),
        (
            "Number of Unknown Voters",
            report.unknown_voters.to_string(),
        ),
        (
            "Number of Potential Sybils Identified",
            report.potential_sybils_identified.to_string(),
        ),
        (
            "Number of Sybil Clusters Formed",
            report.sybil_clusters_formed.to_string(),
        ),
        (
            "Node Reduction After Clustering Sybils",
            format!(
                "{} nodes ({:.2}%)",
                report.node_reduction.nodes_removed, report.node_reduction.percent
            ),
        ),
    ];
    let width = rows.iter().map(|(label, _)| label.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (label, value) in rows {
        out.push_str(&format!("{label:<width$}  {value}\n"));
    }
    out
}

/// One CSV row per cluster member: `cluster_id,node_id,propagated_label`.
pub fn clusters_csv(clusters: &SybilClusterSet) -> String {
    let mut out = String::from("cluster_id,node_id,propagated_label\n");
    for (ci, cluster) in clusters.clusters.iter().enumerate() {
        let label = cluster.label.as_deref().unwrap_or("");
        for &m in &cluster.members {
            out.push_str(&format!("{ci},{m},{label}\n"));
        }
    }
    out
}

/// Histogram of surviving cluster sizes: `size,count`, sizes ascending.
pub fn cluster_size_histogram_csv(clusters: &SybilClusterSet) -> String {
    let mut counts = std::collections::BTreeMap::new();
    for cluster in &clusters.clusters {
        *counts.entry(cluster.members.len()).or_insert(0usize) += 1;
    }
    let mut out = String::from("size,count\n");
    for (size, count) in counts {
        out.push_str(&format!("{size},{count}\n"));
    }
    out
}
