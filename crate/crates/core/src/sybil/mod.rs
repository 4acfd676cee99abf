//! Sybil-cluster identification over learned embeddings: exact L2 search,
//! k-means clustering, cluster filtering, label propagation, graph
//! reduction, and the sociometric report.

mod clusters;
mod index;
mod kmeans;
mod report;

pub use clusters::{
    normalize_clusters, propagate_labels, reduce_graph, ClusterFilterPolicy, ClusterStats,
    ClusteredGraph, PolicySnapshot, SimilarityGraph, SybilCluster, SybilClusterSet,
};
pub use index::{build_index, knn_search, FlatIndex};
pub use kmeans::{kmeans_cluster, KMeansResult};
pub use report::{
    cluster_size_histogram_csv, clusters_csv, render_report_text, sociometric_report, GraphSize,
    NodeReduction, Report,
};

/// Default cluster count: one cluster per hundred unknown voters.
pub fn default_cluster_count(unknown_voters: usize) -> usize {
    unknown_voters.div_ceil(100).max(1)
}
