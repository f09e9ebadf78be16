//! K-means baseline: k-means++ seeding and Lloyd iterations, run in
//! Euclidean space over the (conventionally unit-normalized) embedding
//! vectors. Fully deterministic for a fixed seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClusterAssignment, ClusterError};
use crate::embedding::EmbeddingStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansParams {
    pub k: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Convergence threshold on the largest centroid shift per iteration.
    pub tol: f64,
}

impl KmeansParams {
    pub fn new(k: usize) -> Self {
        KmeansParams { k, max_iters: 100, seed: 0, tol: 1e-6 }
    }
}

/// Full outcome of a K-means run; [`kmeans`] returns just the assignment.
#[derive(Debug, Clone)]
pub struct KmeansRun {
    pub assignment: ClusterAssignment,
    /// Final centroids, indexed by canonical cluster id.
    pub centroids: Vec<Vec<f64>>,
    /// Inertia (sum of squared point-to-centroid distances) recorded after
    /// every Lloyd iteration; non-increasing by construction.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, subsequent centers sampled
/// proportionally to the squared distance from the nearest chosen center.
/// When every remaining point coincides with a chosen center the smallest
/// unchosen index is taken, so the chosen indices are always distinct.
fn seed_centroids(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen.push(first);
    is_chosen[first] = true;

    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, points[first])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let r = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if r < acc {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can push r past the last positive weight.
            pick.unwrap_or_else(|| {
                d2.iter().rposition(|&w| w > 0.0).expect("total > 0 implies a positive weight")
            })
        } else {
            (0..n).find(|&i| !is_chosen[i]).expect("k <= n leaves an unchosen point")
        };
        chosen.push(next);
        is_chosen[next] = true;
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, points[next]);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    chosen
}

/// Runs K-means and returns the assignment plus centroids and the
/// per-iteration inertia trace.
pub fn kmeans_run(store: &EmbeddingStore, params: &KmeansParams) -> Result<KmeansRun, ClusterError> {
    let n = store.len();
    if params.k == 0 {
        return Err(ClusterError::InvalidParams("k must be >= 1".into()));
    }
    if params.k > n {
        return Err(ClusterError::KTooLarge { k: params.k, points: n });
    }
    let records = store.records();
    let points: Vec<&[f64]> = records.iter().map(|r| r.vector.as_slice()).collect();
    let dim = store.dim();
    let k = params.k;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids: Vec<Vec<f64>> =
        seed_centroids(&points, k, &mut rng).into_iter().map(|i| points[i].to_vec()).collect();

    let mut assign = vec![0usize; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..params.max_iters.max(1) {
        // Assignment: nearest centroid, ties to the smaller index.
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = squared_distance(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            assign[i] = best;
        }

        // Repair empty clusters by donating the point currently farthest
        // from its centroid (from clusters that can spare one).
        let mut counts = vec![0usize; k];
        for &a in &assign {
            counts[a] += 1;
        }
        for empty in 0..k {
            if counts[empty] > 0 {
                continue;
            }
            let mut donor = usize::MAX;
            let mut donor_d = -1.0f64;
            for (i, p) in points.iter().enumerate() {
                if counts[assign[i]] <= 1 {
                    continue;
                }
                let d = squared_distance(p, &centroids[assign[i]]);
                if d > donor_d {
                    donor_d = d;
                    donor = i;
                }
            }
            if donor == usize::MAX {
                break;
            }
            counts[assign[donor]] -= 1;
            counts[empty] += 1;
            assign[donor] = empty;
        }

        // Update step: each centroid moves to the mean of its members.
        let mut sums = vec![vec![0.0f64; dim]; k];
        for (i, p) in points.iter().enumerate() {
            for (s, &x) in sums[assign[i]].iter_mut().zip(*p) {
                *s += x;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for s in &mut sums[c] {
                *s /= counts[c] as f64;
            }
            shift = shift.max(squared_distance(&sums[c], &centroids[c]).sqrt());
            centroids[c] = std::mem::take(&mut sums[c]);
        }

        let inertia: f64 =
            points.iter().enumerate().map(|(i, p)| squared_distance(p, &centroids[assign[i]])).sum();
        trace.push(inertia);
        iterations += 1;

        if shift < params.tol {
            break;
        }
    }

    // Canonicalize cluster ids and permute the centroids to match.
    let assignment = ClusterAssignment::from_raw(
        records.iter().zip(&assign).map(|(r, &c)| (r.segment_id.clone(), Some(c))),
    );
    let mut ordered = vec![Vec::new(); assignment.num_clusters()];
    for (record, &raw) in records.iter().zip(&assign) {
        if let Some(super::ClusterLabel::Cluster(canonical)) = assignment.label(&record.segment_id)
        {
            if ordered[canonical].is_empty() {
                ordered[canonical] = centroids[raw].clone();
            }
        }
    }

    Ok(KmeansRun { assignment, centroids: ordered, inertia_trace: trace, iterations })
}

/// K-means clustering; see [`kmeans_run`] for the detailed outcome.
pub fn kmeans(store: &EmbeddingStore, params: &KmeansParams) -> Result<ClusterAssignment, ClusterError> {
    Ok(kmeans_run(store, params)?.assignment)
}
