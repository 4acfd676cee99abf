//! Exact (brute-force) L2 nearest-neighbor index over embedding rows.

use crate::embedder::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::numcore::Tensor;

/// Flat exact index: vectors are scanned in full for every query, so results
/// carry no approximation error.
#[derive(Debug, Clone)]
pub struct FlatIndex {
    vectors: Tensor,
    ids: Vec<usize>,
}

impl FlatIndex {
    /// Indexes `vectors` (one row per entry) under the given external ids.
    pub fn build(vectors: Tensor, ids: Vec<usize>) -> Result<FlatIndex> {
        if vectors.rank() != 2 || vectors.shape()[0] != ids.len() {
            return Err(Error::Shape {
                op: "index_build",
                left: vectors.shape().to_vec(),
                right: vec![ids.len()],
            });
        }
        if !vectors.all_finite() {
            return Err(Error::NonFinite("vectors passed to index build".into()));
        }
        Ok(FlatIndex { vectors, ids })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.shape()[1]
    }
}

/// Indexes every embedding row under its dense node id.
pub fn build_index(embeddings: &EmbeddingMatrix) -> Result<FlatIndex> {
    let n = embeddings.node_count();
    FlatIndex::build(embeddings.matrix.clone(), (0..n).collect())
}

/// Exact k-nearest-neighbor search by squared L2 distance.
///
/// Results per query are distance-ascending; equal distances order by lower
/// id so the output is fully deterministic.
pub fn knn_search(
    index: &FlatIndex,
    queries: &Tensor,
    k: usize,
) -> Result<(Vec<Vec<usize>>, Vec<Vec<f64>>)> {
    if queries.rank() != 2 || queries.shape()[1] != index.dim() {
        return Err(Error::Shape {
            op: "knn_search",
            left: queries.shape().to_vec(),
            right: index.vectors.shape().to_vec(),
        });
    }
    if k == 0 || k > index.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be in 1..={}",
            index.len()
        )));
    }

    let m = queries.shape()[0];
    let d = index.dim();
    let mut all_ids = Vec::with_capacity(m);
    let mut all_dists = Vec::with_capacity(m);
    for qi in 0..m {
        let q = queries.row(qi);
        let mut scored: Vec<(f64, usize)> = (0..index.len())
            .map(|vi| {
                let v = &index.vectors.data()[vi * d..(vi + 1) * d];
                let dist: f64 = q.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (dist, index.ids[vi])
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.truncate(k);
        all_ids.push(scored.iter().map(|&(_, id)| id).collect());
        all_dists.push(scored.iter().map(|&(dist, _)| dist).collect());
    }
    Ok((all_ids, all_dists))
}
