//! Unsupervised grouping of speaker embeddings: HDBSCAN built from scratch,
//! a K-means baseline, and threshold-based cluster merging.
//!
//! All three routines are deterministic for fixed inputs, parameters and
//! seed, including across platforms: the canonical point order is the
//! store's sorted-segment-id order, and every tie (MST edges, nearest
//! centroids, merge pairs) is broken by explicit rules rather than by
//! iteration accidents.

pub mod hdbscan;
pub mod kmeans;
pub mod merge;

pub use hdbscan::{hdbscan, HdbscanParams};
pub use kmeans::{kmeans, kmeans_run, KmeansParams, KmeansRun};
pub use merge::merge_clusters;

use std::collections::BTreeMap;

use crate::embedding::{cosine_similarity, EmbeddingError, EmbeddingStore};

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("too few points: need at least {needed}, have {available}")]
    TooFewPoints { needed: usize, available: usize },
    #[error("k = {k} exceeds the number of points ({points})")]
    KTooLarge { k: usize, points: usize },
    #[error("merge threshold {0} outside the open interval (-1, 1)")]
    InvalidThreshold(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown segment id {0:?}")]
    UnknownSegment(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Distance used for neighborhoods and the mutual-reachability graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// `1 - cosine_similarity`; the default, matching how speaker
    /// embeddings are compared.
    #[default]
    CosineDistance,
    Euclidean,
}

impl Metric {
    pub(crate) fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::CosineDistance => {
                1.0 - cosine_similarity(a, b).expect("store vectors have positive norm")
            }
            Metric::Euclidean => {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" | "cosine_distance" => Ok(Metric::CosineDistance),
            "euclidean" => Ok(Metric::Euclidean),
            other => Err(format!("unknown metric {other:?} (expected cosine|euclidean)")),
        }
    }
}

/// A segment's cluster membership. `Noise` appears only in HDBSCAN output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterLabel {
    Cluster(usize),
    Noise,
}

impl std::fmt::Display for ClusterLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClusterLabel::Cluster(id) => write!(f, "{id}"),
            ClusterLabel::Noise => f.write_str("NOISE"),
        }
    }
}

/// Map from every input segment to a cluster id or noise. Cluster ids are
/// canonical: contiguous `0..K-1`, ordered by each cluster's first member
/// in sorted-segment-id order, so equal partitions always compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    labels: BTreeMap<String, ClusterLabel>,
    num_clusters: usize,
}

impl ClusterAssignment {
    /// Builds a canonicalized assignment from arbitrary raw cluster ids
    /// (`None` = noise).
    pub fn from_raw<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Option<usize>)>,
        S: Into<String>,
    {
        let raw: BTreeMap<String, Option<usize>> =
            pairs.into_iter().map(|(id, label)| (id.into(), label)).collect();
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        let mut labels = BTreeMap::new();
        for (segment_id, raw_label) in raw {
            let label = match raw_label {
                None => ClusterLabel::Noise,
                Some(old) => {
                    let next = remap.len();
                    ClusterLabel::Cluster(*remap.entry(old).or_insert(next))
                }
            };
            labels.insert(segment_id, label);
        }
        ClusterAssignment { labels, num_clusters: remap.len() }
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, segment_id: &str) -> Option<ClusterLabel> {
        self.labels.get(segment_id).copied()
    }

    /// (segment_id, label) pairs in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, ClusterLabel)> {
        self.labels.iter().map(|(id, &label)| (id.as_str(), label))
    }

    pub fn noise_count(&self) -> usize {
        self.labels.values().filter(|&&l| l == ClusterLabel::Noise).count()
    }

    /// Member segment ids per cluster, indexed by cluster id.
    pub fn members(&self) -> Vec<Vec<&str>> {
        let mut members = vec![Vec::new(); self.num_clusters];
        for (id, label) in self.iter() {
            if let ClusterLabel::Cluster(c) = label {
                members[c].push(id);
            }
        }
        members
    }

    /// The external TSV form: `segment_id<TAB>cluster_id` with the literal
    /// `NOISE` for noise, sorted by segment id.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, label) in self.iter() {
            out.push_str(&format!("{id}\t{label}\n"));
        }
        out
    }
}

/// Distance from each point to its k-th nearest neighbor (self excluded)
/// under `metric`. Needs at least `k + 1` points.
pub fn core_distances(
    store: &EmbeddingStore,
    k: usize,
    metric: Metric,
) -> Result<BTreeMap<String, f64>, ClusterError> {
    let values = core_distance_values(store, k, metric)?;
    Ok(store
        .records()
        .iter()
        .zip(values)
        .map(|(r, d)| (r.segment_id.clone(), d))
        .collect())
}

/// Core distances aligned with the store's canonical record order.
pub(crate) fn core_distance_values(
    store: &EmbeddingStore,
    k: usize,
    metric: Metric,
) -> Result<Vec<f64>, ClusterError> {
    use rayon::prelude::*;

    let n = store.len();
    if k == 0 {
        return Err(ClusterError::InvalidParams("core distance k must be >= 1".into()));
    }
    if n < k + 1 {
        return Err(ClusterError::TooFewPoints { needed: k + 1, available: n });
    }
    let records = store.records();
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| metric.distance(&records[i].vector, &records[j].vector))
                .collect();
            let (_, kth, _) = row.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect();
    Ok(values)
}

/// `max(core[a], core[b], dist(a, b))` — the distance HDBSCAN builds its
/// spanning tree on. Core distances must come from the same store/metric.
pub fn mutual_reachability(
    store: &EmbeddingStore,
    a: &str,
    b: &str,
    core: &BTreeMap<String, f64>,
    metric: Metric,
) -> Result<f64, ClusterError> {
    let lookup = |id: &str| -> Result<(&[f64], f64), ClusterError> {
        let record = store.get(id).ok_or_else(|| ClusterError::UnknownSegment(id.to_string()))?;
        let core = *core.get(id).ok_or_else(|| ClusterError::UnknownSegment(id.to_string()))?;
        Ok((&record.vector, core))
    };
    let (va, ca) = lookup(a)?;
    let (vb, cb) = lookup(b)?;
    Ok(metric.distance(va, vb).max(ca).max(cb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Embedding;

    fn store_1d(values: &[f64]) -> EmbeddingStore {
        // 2-d points on a line so euclidean distances equal the 1-d gaps.
        let records = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Embedding {
                segment_id: format!("p{i}"),
                speaker_id: "spk".into(),
                vector: vec![v, 1.0],
            })
            .collect();
        EmbeddingStore::from_records(records, false).unwrap()
    }

    #[test]
    fn core_distances_collinear_example() {
        let store = store_1d(&[0.0, 1.0, 3.0]);
        let core = core_distances(&store, 1, Metric::Euclidean).unwrap();
        assert_eq!(core["p0"], 1.0);
        assert_eq!(core["p1"], 1.0);
        assert_eq!(core["p2"], 2.0);
    }

    #[test]
    fn core_distances_identical_points_are_zero() {
        let store = store_1d(&[2.0, 2.0, 2.0, 2.0]);
        let core = core_distances(&store, 2, Metric::Euclidean).unwrap();
        assert!(core.values().all(|&d| d == 0.0));
    }

    #[test]
    fn core_distance_with_max_k_is_farthest_neighbor() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let n = rng.gen_range(2..=20);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let store = store_1d(&values);
            let core = core_distances(&store, n - 1, Metric::Euclidean).unwrap();
            for (i, &v) in values.iter().enumerate() {
                let farthest = values
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &w)| (v - w).abs())
                    .fold(0.0f64, f64::max);
                let got = core[&format!("p{i}")];
                assert!((got - farthest).abs() < 1e-12, "trial {trial}: {got} vs {farthest}");
            }
        }
    }

    #[test]
    fn core_distances_rejects_small_stores() {
        let store = store_1d(&[0.0, 1.0]);
        assert!(matches!(
            core_distances(&store, 2, Metric::Euclidean),
            Err(ClusterError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn mutual_reachability_cases() {
        let store = store_1d(&[0.0, 0.1]);
        let mut core = BTreeMap::new();
        core.insert("p0".to_string(), 0.0);
        core.insert("p1".to_string(), 0.0);
        let d = mutual_reachability(&store, "p0", "p1", &core, Metric::Euclidean).unwrap();
        assert!((d - 0.1).abs() < 1e-12);

        core.insert("p0".to_string(), 0.5);
        core.insert("p1".to_string(), 0.2);
        let d = mutual_reachability(&store, "p0", "p1", &core, Metric::Euclidean).unwrap();
        assert_eq!(d, 0.5);
        let rev = mutual_reachability(&store, "p1", "p0", &core, Metric::Euclidean).unwrap();
        assert_eq!(d, rev);
    }

    #[test]
    fn assignment_canonicalization_orders_by_first_member() {
        let assignment = ClusterAssignment::from_raw(vec![
            ("c", Some(7)),
            ("a", Some(42)),
            ("b", None),
            ("d", Some(42)),
        ]);
        // "a" comes first in canonical order, so its raw cluster 42 gets id 0.
        assert_eq!(assignment.label("a"), Some(ClusterLabel::Cluster(0)));
        assert_eq!(assignment.label("d"), Some(ClusterLabel::Cluster(0)));
        assert_eq!(assignment.label("c"), Some(ClusterLabel::Cluster(1)));
        assert_eq!(assignment.label("b"), Some(ClusterLabel::Noise));
        assert_eq!(assignment.num_clusters(), 2);
        assert_eq!(assignment.to_tsv(), "a\t0\nb\tNOISE\nc\t1\nd\t0\n");
    }
}
