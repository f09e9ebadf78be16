//! Greedy agglomerative cluster merging on centroid cosine similarity.
//!
//! Repeatedly merges the pair of non-noise clusters whose centroids are
//! most similar, provided the similarity strictly exceeds the threshold,
//! recomputing the merged centroid (mean of member unit vectors,
//! re-normalized) before looking again. The procedure is idempotent: once
//! it stops, every pair of surviving centroids sits at or below the
//! threshold.

use super::{ClusterAssignment, ClusterError, ClusterLabel};
use crate::embedding::{centroid_of, cosine_similarity, EmbeddingStore};

struct MergeSlot {
    /// Store record indices, kept sorted so centroid sums are
    /// order-deterministic.
    members: Vec<usize>,
    /// Unit centroid; `None` for degenerate clusters (numerically zero
    /// mean) which are excluded from merging and passed through unchanged.
    centroid: Option<Vec<f64>>,
}

/// Merges clusters of `assignment` whose centroid cosine similarity
/// strictly exceeds `threshold` (e.g. the pipeline default 0.75). Noise
/// points are untouched. Ties on similarity prefer the smallest cluster-id
/// pair, making the merge order deterministic.
pub fn merge_clusters(
    assignment: &ClusterAssignment,
    store: &EmbeddingStore,
    threshold: f64,
) -> Result<ClusterAssignment, ClusterError> {
    if !(-1.0 < threshold && threshold < 1.0) {
        return Err(ClusterError::InvalidThreshold(threshold));
    }

    let index_of = |segment_id: &str| -> Result<usize, ClusterError> {
        store
            .records()
            .binary_search_by(|r| r.segment_id.as_str().cmp(segment_id))
            .map_err(|_| ClusterError::UnknownSegment(segment_id.to_string()))
    };

    let mut slots: Vec<MergeSlot> = Vec::with_capacity(assignment.num_clusters());
    for members in assignment.members() {
        let mut indices = Vec::with_capacity(members.len());
        for id in members {
            indices.push(index_of(id)?);
        }
        indices.sort_unstable();
        slots.push(make_slot(store, indices));
    }

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..slots.len() {
            let Some(ci) = &slots[i].centroid else { continue };
            for (j_off, slot_j) in slots[i + 1..].iter().enumerate() {
                let j = i + 1 + j_off;
                let Some(cj) = &slot_j.centroid else { continue };
                let sim = cosine_similarity(ci, cj).expect("centroids are unit vectors");
                if best.map_or(true, |(b, _, _)| sim > b) {
                    best = Some((sim, i, j));
                }
            }
        }
        match best {
            Some((sim, i, j)) if sim > threshold => {
                let absorbed = std::mem::replace(
                    &mut slots[j],
                    MergeSlot { members: Vec::new(), centroid: None },
                );
                let mut merged = std::mem::take(&mut slots[i].members);
                merged.extend(absorbed.members);
                merged.sort_unstable();
                slots[i] = make_slot(store, merged);
            }
            _ => break,
        }
    }

    let records = store.records();
    let mut raw: Vec<(String, Option<usize>)> = assignment
        .iter()
        .filter(|(_, label)| *label == ClusterLabel::Noise)
        .map(|(id, _)| (id.to_string(), None))
        .collect();
    for (slot_id, slot) in slots.iter().enumerate() {
        for &idx in &slot.members {
            raw.push((records[idx].segment_id.clone(), Some(slot_id)));
        }
    }
    Ok(ClusterAssignment::from_raw(raw))
}

fn make_slot(store: &EmbeddingStore, members: Vec<usize>) -> MergeSlot {
    let records = store.records();
    let centroid = centroid_of(0, members.iter().map(|&i| &records[i]))
        .map(|c| c.vector)
        .ok();
    if centroid.is_none() && !members.is_empty() {
        log::warn!("cluster with {} members has a degenerate centroid; excluded from merging", members.len());
    }
    MergeSlot { members, centroid }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Embedding;

    /// Unit vector at `angle` radians in the plane.
    fn at_angle(id: &str, angle: f64) -> Embedding {
        Embedding {
            segment_id: id.into(),
            speaker_id: id.into(),
            vector: vec![angle.cos(), angle.sin()],
        }
    }

    fn singleton_assignment(store: &EmbeddingStore) -> ClusterAssignment {
        ClusterAssignment::from_raw(
            store
                .records()
                .iter()
                .enumerate()
                .map(|(i, r)| (r.segment_id.clone(), Some(i))),
        )
    }

    fn pairwise_max_similarity(store: &EmbeddingStore, assignment: &ClusterAssignment) -> f64 {
        let records = store.records();
        let centroids: Vec<Vec<f64>> = assignment
            .members()
            .iter()
            .map(|ids| {
                let members = ids.iter().map(|id| {
                    &records[records
                        .binary_search_by(|r| r.segment_id.as_str().cmp(id))
                        .unwrap()]
                });
                centroid_of(0, members).unwrap().vector
            })
            .collect();
        let mut max = -1.0f64;
        for i in 0..centroids.len() {
            for j in i + 1..centroids.len() {
                max = max.max(cosine_similarity(&centroids[i], &centroids[j]).unwrap());
            }
        }
        max
    }

    #[test]
    fn merges_above_threshold_only() {
        // cos(angle) = 0.80 between the two singleton centroids.
        let store = EmbeddingStore::from_records(
            vec![at_angle("a", 0.0), at_angle("b", 0.80f64.acos())],
            true,
        )
        .unwrap();
        let assignment = singleton_assignment(&store);
        let merged = merge_clusters(&assignment, &store, 0.75).unwrap();
        assert_eq!(merged.num_clusters(), 1);

        // cos = 0.70 stays below the threshold: unchanged.
        let store = EmbeddingStore::from_records(
            vec![at_angle("a", 0.0), at_angle("b", 0.70f64.acos())],
            true,
        )
        .unwrap();
        let assignment = singleton_assignment(&store);
        let merged = merge_clusters(&assignment, &store, 0.75).unwrap();
        assert_eq!(merged, assignment);
    }

    #[test]
    fn threshold_is_strictly_exceeds() {
        let store = EmbeddingStore::from_records(
            vec![at_angle("a", 0.0), at_angle("b", 0.75f64.acos())],
            true,
        )
        .unwrap();
        let assignment = singleton_assignment(&store);
        let merged = merge_clusters(&assignment, &store, 0.75).unwrap();
        // Similarity == threshold does not merge.
        assert_eq!(merged.num_clusters(), 2);
    }

    /// Three single-member clusters A, B, C. A~B is the most similar pair;
    /// after merging them the new centroid sits at the bisector angle, and
    /// whether C joins depends on its angle from that bisector.
    #[test]
    fn chain_merge_depends_on_recomputed_centroid() {
        let ab_angle = 0.9f64.acos();
        let bisector = ab_angle / 2.0;

        // C placed so cos(bisector, C) = 0.76 -> everything merges.
        let c_close = bisector + 0.76f64.acos();
        let store = EmbeddingStore::from_records(
            vec![at_angle("a", 0.0), at_angle("b", ab_angle), at_angle("c", c_close)],
            true,
        )
        .unwrap();
        let merged = merge_clusters(&singleton_assignment(&store), &store, 0.75).unwrap();
        assert_eq!(merged.num_clusters(), 1);

        // C placed so cos(bisector, C) = 0.74 -> two clusters remain.
        let c_far = bisector + 0.74f64.acos();
        let store = EmbeddingStore::from_records(
            vec![at_angle("a", 0.0), at_angle("b", ab_angle), at_angle("c", c_far)],
            true,
        )
        .unwrap();
        let merged = merge_clusters(&singleton_assignment(&store), &store, 0.75).unwrap();
        assert_eq!(merged.num_clusters(), 2);
    }

    #[test]
    fn noise_points_pass_through_and_merge_is_idempotent() {
        let store = EmbeddingStore::from_records(
            vec![
                at_angle("a", 0.0),
                at_angle("b", 0.1),
                at_angle("c", 1.2),
                at_angle("n", 2.8),
            ],
            true,
        )
        .unwrap();
        let assignment = ClusterAssignment::from_raw(vec![
            ("a".to_string(), Some(0)),
            ("b".to_string(), Some(1)),
            ("c".to_string(), Some(2)),
            ("n".to_string(), None),
        ]);
        let once = merge_clusters(&assignment, &store, 0.75).unwrap();
        assert_eq!(once.label("n"), Some(ClusterLabel::Noise));
        let twice = merge_clusters(&once, &store, 0.75).unwrap();
        assert_eq!(once, twice);
        assert!(pairwise_max_similarity(&store, &once) <= 0.75 + 1e-9);
    }

    #[test]
    fn no_op_on_fewer_than_two_clusters() {
        let store = EmbeddingStore::from_records(vec![at_angle("a", 0.3)], true).unwrap();
        let assignment = singleton_assignment(&store);
        let merged = merge_clusters(&assignment, &store, 0.75).unwrap();
        assert_eq!(merged, assignment);
    }

    #[test]
    fn invalid_threshold_rejected() {
        let store = EmbeddingStore::from_records(vec![at_angle("a", 0.0)], true).unwrap();
        let assignment = singleton_assignment(&store);
        assert!(matches!(
            merge_clusters(&assignment, &store, 1.0),
            Err(ClusterError::InvalidThreshold(_))
        ));
    }
}
