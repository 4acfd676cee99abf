//! Lloyd's algorithm with k-means++ seeding and deterministic tie handling.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::Tensor;

/// Final state of one k-means run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KMeansResult {
    pub k: usize,
    /// `[k, d]` centroid matrix.
    pub centroids: Tensor,
    /// Cluster index per input point.
    pub assignments: Vec<usize>,
    /// Sum of squared distances of points to their assigned centroid,
    /// consistent with `centroids` and `assignments` as returned.
    pub objective: f64,
    pub iterations_run: usize,
    /// Objective measured after each assignment phase; non-increasing.
    pub objective_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++: first centroid uniform, the rest sampled proportional to the
/// squared distance from the nearest centroid chosen so far.
fn seed_centroids(points: &Tensor, k: usize, rng: &mut ChaCha20Rng) -> Vec<usize> {
    let m = points.shape()[0];
    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; m];
    let first = rng.gen_range(0..m);
    chosen.push(first);
    is_chosen[first] = true;

    // Chosen points carry weight 0 and are never drawn again.
    let mut best_dist: Vec<f64> = (0..m)
        .map(|i| sq_dist(points.row(i), points.row(first)))
        .collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&best_dist) {
            Ok(dist) => dist.sample(rng),
            // All remaining distances zero (duplicate points): take the
            // lowest-index point not yet chosen.
            Err(_) => (0..m).find(|&i| !is_chosen[i]).unwrap_or(0),
        };
        chosen.push(next);
        is_chosen[next] = true;
        for i in 0..m {
            best_dist[i] = best_dist[i].min(sq_dist(points.row(i), points.row(next)));
        }
    }
    chosen
}

/// Clusters `points` (`[m, d]`) into `k` groups.
///
/// Stops when an assignment pass changes nothing or after `max_iters`
/// passes. A cluster that loses all members is re-seeded at the point
/// currently farthest from its own centroid, which keeps the objective
/// non-increasing.
pub fn kmeans_cluster(
    points: &Tensor,
    k: usize,
    max_iters: usize,
    seed: u64,
) -> Result<KMeansResult> {
    if points.rank() != 2 {
        return Err(Error::Shape {
            op: "kmeans",
            left: points.shape().to_vec(),
            right: vec![],
        });
    }
    let (m, d) = (points.shape()[0], points.shape()[1]);
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!(
            "k = {k} must be in 1..={m}"
        )));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let seeds = seed_centroids(points, k, &mut rng);
    let mut centroids = Tensor::zeros(&[k, d]);
    for (c, &pi) in seeds.iter().enumerate() {
        centroids.data_mut()[c * d..(c + 1) * d].copy_from_slice(points.row(pi));
    }

    let mut assignments = vec![usize::MAX; m];
    let mut history = Vec::new();
    let mut iterations_run = 0;

    loop {
        iterations_run += 1;

        // Assignment: nearest centroid, ties to the lower index.
        let mut new_assign = vec![0usize; m];
        let mut dists = vec![0.0f64; m];
        for i in 0..m {
            let p = points.row(i);
            let mut best = (f64::INFINITY, 0usize);
            for c in 0..k {
                let dist = sq_dist(p, centroids.row(c));
                if dist < best.0 {
                    best = (dist, c);
                }
            }
            new_assign[i] = best.1;
            dists[i] = best.0;
        }
        history.push(dists.iter().sum());

        let stable = new_assign == assignments;
        assignments = new_assign;
        if stable || iterations_run >= max_iters {
            break;
        }

        // Update: centroid = mean of members.
        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0usize; k];
        for i in 0..m {
            let c = assignments[i];
            counts[c] += 1;
            for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (dst, s) in centroids.data_mut()[c * d..(c + 1) * d]
                    .iter_mut()
                    .zip(&sums[c * d..(c + 1) * d])
                {
                    *dst = s / counts[c] as f64;
                }
            }
        }

        // Repair empty clusters: move each to the point farthest from its
        // own (updated) centroid, claiming that point.
        let empties: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        if !empties.is_empty() {
            let mut cur_dist: Vec<f64> = (0..m)
                .map(|i| sq_dist(points.row(i), centroids.row(assignments[i])))
                .collect();
            for c in empties {
                let far = (0..m)
                    .max_by(|&a, &b| cur_dist[a].total_cmp(&cur_dist[b]).then(b.cmp(&a)))
                    .expect("at least one point");
                centroids.data_mut()[c * d..(c + 1) * d].copy_from_slice(points.row(far));
                assignments[far] = c;
                cur_dist[far] = 0.0;
            }
        }
    }

    let objective = (0..m)
        .map(|i| sq_dist(points.row(i), centroids.row(assignments[i])))
        .sum();

    Ok(KMeansResult {
        k,
        centroids,
        assignments,
        objective,
        iterations_run,
        objective_history: history,
    })
}
