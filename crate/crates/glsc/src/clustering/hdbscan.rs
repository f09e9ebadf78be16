//! Hierarchical density-based clustering with noise.
//!
//! The full pipeline: core distances -> mutual-reachability graph -> minimum
//! spanning tree -> single-linkage dendrogram -> condensed tree pruned at
//! `min_cluster_size` -> excess-of-mass (stability) cluster selection.
//! Points that fall out of the hierarchy above every selected cluster are
//! labeled noise.
//!
//! Density is expressed through lambda values `λ = 1 / mutual-reachability
//! distance`; a cluster's stability is the lambda mass its members spend
//! inside it. Selection compares each cluster's stability against the summed
//! stability of its child clusters, keeping whichever explains more mass
//! (ties prefer the finer clusters). The hierarchy root is selected only as
//! a fallback when it has no viable sub-cluster at all — e.g. when every
//! pairwise distance is zero — which yields a single all-points cluster
//! instead of labeling everything noise.

use std::collections::BTreeMap;

use super::{core_distance_values, ClusterAssignment, ClusterError, Metric};
use crate::embedding::EmbeddingStore;

/// HDBSCAN hyperparameters. The defaults (`min_cluster_size = 5`,
/// `min_samples = min_cluster_size`, cosine distance) follow the common
/// reference-implementation conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HdbscanParams {
    /// Smallest group of points accepted as a cluster; at least 2.
    pub min_cluster_size: usize,
    /// Neighbor count for core distances. Defaults to `min_cluster_size`;
    /// may be overridden independently.
    pub min_samples: usize,
    pub metric: Metric,
}

impl HdbscanParams {
    pub fn new(min_cluster_size: usize) -> Self {
        HdbscanParams {
            min_cluster_size,
            min_samples: min_cluster_size,
            metric: Metric::CosineDistance,
        }
    }
}

impl Default for HdbscanParams {
    fn default() -> Self {
        HdbscanParams::new(5)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Prim's algorithm over the complete mutual-reachability graph, O(n^2)
/// time and O(n) memory. Ties pick the smallest vertex index, so the tree
/// is deterministic in canonical point order.
pub(crate) fn minimum_spanning_tree(
    n: usize,
    mut pair_distance: impl FnMut(usize, usize) -> f64,
) -> Vec<MstEdge> {
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    best[0] = 0.0;
    let mut edges = Vec::with_capacity(n.saturating_sub(1));

    for _ in 0..n {
        let mut u = usize::MAX;
        let mut lowest = f64::INFINITY;
        for v in 0..n {
            if !in_tree[v] && best[v] < lowest {
                lowest = best[v];
                u = v;
            }
        }
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            edges.push(MstEdge { a: parent[u].min(u), b: parent[u].max(u), weight: best[u] });
        }
        for v in 0..n {
            if !in_tree[v] {
                let w = pair_distance(u, v);
                if w < best[v] {
                    best[v] = w;
                    parent[v] = u;
                }
            }
        }
    }
    edges.sort_by(|x, y| {
        x.weight.total_cmp(&y.weight).then(x.a.cmp(&y.a)).then(x.b.cmp(&y.b))
    });
    edges
}

/// One merge of the single-linkage dendrogram. `left`/`right` are point ids
/// (< n) or previously created dendrogram node ids (>= n).
struct SltNode {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

fn single_linkage(n: usize, edges: &[MstEdge]) -> Vec<SltNode> {
    // Union-find over point ids and dendrogram node ids; each root points
    // at the most recent node representing its component.
    let total = 2 * n - 1;
    let mut parent: Vec<usize> = (0..total).collect();
    let mut size: Vec<usize> = vec![1; total];

    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut nodes = Vec::with_capacity(n - 1);
    for (i, edge) in edges.iter().enumerate() {
        let new_id = n + i;
        let left = find(&mut parent, edge.a);
        let right = find(&mut parent, edge.b);
        debug_assert_ne!(left, right, "MST edges never close a cycle");
        size[new_id] = size[left] + size[right];
        parent[left] = new_id;
        parent[right] = new_id;
        nodes.push(SltNode { left, right, distance: edge.weight, size: size[new_id] });
    }
    nodes
}

/// Condensed-tree entry: `child` (a point id < n or a cluster id >= n)
/// separated from cluster `parent` at density `lambda`.
struct CondensedNode {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

fn collect_leaves(n: usize, slt: &[SltNode], root: usize, out: &mut Vec<usize>) {
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if id < n {
            out.push(id);
        } else {
            let node = &slt[id - n];
            stack.push(node.left);
            stack.push(node.right);
        }
    }
}

/// Walks the dendrogram top-down, keeping only splits where both sides
/// reach `min_cluster_size`. Smaller side-branches dissolve into leaf
/// entries of the cluster they fell out of.
fn condense_tree(n: usize, slt: &[SltNode], min_cluster_size: usize) -> Vec<CondensedNode> {
    let root = n + slt.len() - 1;
    let mut relabel = vec![usize::MAX; 2 * n - 1];
    relabel[root] = n;
    let mut next_id = n + 1;
    let mut out = Vec::new();
    let mut queue = std::collections::VecDeque::from([root]);
    let mut leaves = Vec::new();

    while let Some(node_id) = queue.pop_front() {
        let cluster_id = relabel[node_id];
        let node = &slt[node_id - n];
        let lambda = lambda_of(node.distance);
        let child_size =
            |id: usize| -> usize { if id < n { 1 } else { slt[id - n].size } };
        let left_size = child_size(node.left);
        let right_size = child_size(node.right);
        let left_big = left_size >= min_cluster_size;
        let right_big = right_size >= min_cluster_size;

        match (left_big, right_big) {
            (true, true) => {
                for (child, size) in [(node.left, left_size), (node.right, right_size)] {
                    relabel[child] = next_id;
                    next_id += 1;
                    out.push(CondensedNode {
                        parent: cluster_id,
                        child: relabel[child],
                        lambda,
                        size,
                    });
                    queue.push_back(child);
                }
            }
            (false, false) => {
                leaves.clear();
                collect_leaves(n, slt, node.left, &mut leaves);
                collect_leaves(n, slt, node.right, &mut leaves);
                for &p in &leaves {
                    out.push(CondensedNode { parent: cluster_id, child: p, lambda, size: 1 });
                }
            }
            (true, false) | (false, true) => {
                let (keep, shed) =
                    if left_big { (node.left, node.right) } else { (node.right, node.left) };
                relabel[keep] = cluster_id;
                queue.push_back(keep);
                leaves.clear();
                collect_leaves(n, slt, shed, &mut leaves);
                for &p in &leaves {
                    out.push(CondensedNode { parent: cluster_id, child: p, lambda, size: 1 });
                }
            }
        }
    }
    out
}

/// `a - b` with the convention that two infinite lambdas cancel to zero
/// (a point born and shed at zero distance spends no lambda mass).
fn lambda_diff(a: f64, b: f64) -> f64 {
    if a.is_infinite() && b.is_infinite() {
        0.0
    } else {
        a - b
    }
}

/// Excess-of-mass cluster selection. Returns the selected cluster ids.
fn select_clusters_eom(n: usize, condensed: &[CondensedNode]) -> Vec<usize> {
    let root = n;
    let max_id = condensed.iter().map(|e| e.parent.max(e.child)).max().unwrap_or(root);
    if max_id == root {
        // No sub-cluster ever formed; fall back to the root as a single
        // all-points cluster rather than calling everything noise.
        return vec![root];
    }

    let mut birth: BTreeMap<usize, f64> = BTreeMap::new();
    birth.insert(root, 0.0);
    let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for entry in condensed {
        if entry.child >= n {
            birth.insert(entry.child, entry.lambda);
            children.entry(entry.parent).or_default().push(entry.child);
        }
    }

    let mut stability: BTreeMap<usize, f64> = BTreeMap::new();
    for entry in condensed {
        let b = birth[&entry.parent];
        *stability.entry(entry.parent).or_insert(0.0) +=
            lambda_diff(entry.lambda, b) * entry.size as f64;
    }

    let mut selected: BTreeMap<usize, bool> = BTreeMap::new();
    let mut score: BTreeMap<usize, f64> = BTreeMap::new();
    for id in (root + 1..=max_id).rev() {
        let own = stability.get(&id).copied().unwrap_or(0.0);
        let subtree: f64 = children
            .get(&id)
            .map(|kids| kids.iter().map(|k| score[k]).sum())
            .unwrap_or(0.0);
        if own > subtree {
            selected.insert(id, true);
            // Deselect everything underneath.
            let mut stack: Vec<usize> = children.get(&id).cloned().unwrap_or_default();
            while let Some(d) = stack.pop() {
                selected.insert(d, false);
                if let Some(kids) = children.get(&d) {
                    stack.extend(kids);
                }
            }
            score.insert(id, own);
        } else {
            selected.insert(id, false);
            score.insert(id, subtree);
        }
    }

    let picked: Vec<usize> =
        selected.iter().filter(|(_, &keep)| keep).map(|(&id, _)| id).collect();
    if picked.is_empty() {
        return vec![root];
    }
    picked
}

/// Assigns each point to the nearest selected ancestor of its condensed-tree
/// entry, or noise when it fell out above every selected cluster.
fn label_points(n: usize, condensed: &[CondensedNode], selected: &[usize]) -> Vec<Option<usize>> {
    let selected_set: std::collections::BTreeSet<usize> = selected.iter().copied().collect();
    let mut cluster_parent: BTreeMap<usize, usize> = BTreeMap::new();
    let mut point_parent = vec![usize::MAX; n];
    for entry in condensed {
        if entry.child < n {
            point_parent[entry.child] = entry.parent;
        } else {
            cluster_parent.insert(entry.child, entry.parent);
        }
    }

    (0..n)
        .map(|p| {
            let mut cluster = point_parent[p];
            loop {
                if selected_set.contains(&cluster) {
                    return Some(cluster);
                }
                match cluster_parent.get(&cluster) {
                    Some(&up) => cluster = up,
                    None => return None,
                }
            }
        })
        .collect()
}

/// Runs the full HDBSCAN pipeline over the store's canonical point order.
pub fn hdbscan(
    store: &EmbeddingStore,
    params: &HdbscanParams,
) -> Result<ClusterAssignment, ClusterError> {
    if params.min_cluster_size < 2 {
        return Err(ClusterError::InvalidParams("min_cluster_size must be >= 2".into()));
    }
    if params.min_samples < 1 {
        return Err(ClusterError::InvalidParams("min_samples must be >= 1".into()));
    }
    let n = store.len();
    if n < params.min_cluster_size {
        return Err(ClusterError::TooFewPoints { needed: params.min_cluster_size, available: n });
    }
    let core = core_distance_values(store, params.min_samples, params.metric)?;

    let records = store.records();
    let mst = minimum_spanning_tree(n, |a, b| {
        let d = params.metric.distance(&records[a].vector, &records[b].vector);
        d.max(core[a]).max(core[b])
    });
    let slt = single_linkage(n, &mst);
    let condensed = condense_tree(n, &slt, params.min_cluster_size);
    let selected = select_clusters_eom(n, &condensed);
    let labels = label_points(n, &condensed, &selected);

    Ok(ClusterAssignment::from_raw(
        records
            .iter()
            .zip(labels)
            .map(|(record, label)| (record.segment_id.clone(), label)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ClusterLabel;
    use crate::embedding::{Embedding, EmbeddingStore};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob_store(
        centers: &[(f64, f64)],
        per_blob: usize,
        sigma: f64,
        outliers: &[(f64, f64)],
        seed: u64,
    ) -> (EmbeddingStore, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut records = Vec::new();
        let mut truth = Vec::new();
        for (b, &(cx, cy)) in centers.iter().enumerate() {
            for i in 0..per_blob {
                records.push(Embedding {
                    segment_id: format!("b{b}_{i:03}"),
                    speaker_id: format!("blob{b}"),
                    vector: vec![
                        cx + sigma * rng.gen_range(-1.0..1.0),
                        cy + sigma * rng.gen_range(-1.0..1.0),
                    ],
                });
                truth.push(b);
            }
        }
        for (i, &(x, y)) in outliers.iter().enumerate() {
            records.push(Embedding {
                segment_id: format!("out_{i:03}"),
                speaker_id: "outlier".into(),
                vector: vec![x, y],
            });
        }
        (EmbeddingStore::from_records(records, false).unwrap(), truth)
    }

    #[test]
    fn recovers_well_separated_blobs() {
        let (store, truth) =
            blob_store(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], 5, 0.05, &[], 1);
        let params = HdbscanParams {
            min_cluster_size: 5,
            min_samples: 3,
            metric: Metric::Euclidean,
        };
        let assignment = hdbscan(&store, &params).unwrap();
        assert_eq!(assignment.num_clusters(), 3);
        assert_eq!(assignment.noise_count(), 0);
        // Same blob -> same cluster.
        let labels: Vec<ClusterLabel> =
            store.records().iter().map(|r| assignment.label(&r.segment_id).unwrap()).collect();
        for (i, &ti) in truth.iter().enumerate() {
            for (j, &tj) in truth.iter().enumerate() {
                assert_eq!(labels[i] == labels[j], ti == tj, "points {i} and {j}");
            }
        }
    }

    #[test]
    fn far_outliers_become_noise() {
        // Blobs of 8 > min_cluster_size 6 > 5 outliers, so no outlier group
        // can form a cluster.
        let outliers =
            [(50.0, 50.0), (-40.0, 55.0), (60.0, -45.0), (-55.0, -60.0), (70.0, 10.0)];
        let (store, _) = blob_store(&[(0.0, 0.0), (10.0, 0.0)], 8, 0.05, &outliers, 2);
        let params = HdbscanParams {
            min_cluster_size: 6,
            min_samples: 3,
            metric: Metric::Euclidean,
        };
        let assignment = hdbscan(&store, &params).unwrap();
        assert_eq!(assignment.num_clusters(), 2);
        for record in store.records() {
            let label = assignment.label(&record.segment_id).unwrap();
            if record.speaker_id == "outlier" {
                assert_eq!(label, ClusterLabel::Noise, "{}", record.segment_id);
            } else {
                assert_ne!(label, ClusterLabel::Noise, "{}", record.segment_id);
            }
        }
    }

    #[test]
    fn identical_points_form_one_cluster_without_noise() {
        let records = (0..10)
            .map(|i| Embedding {
                segment_id: format!("p{i}"),
                speaker_id: "s".into(),
                vector: vec![0.6, 0.8],
            })
            .collect();
        let store = EmbeddingStore::from_records(records, true).unwrap();
        let params = HdbscanParams {
            min_cluster_size: 5,
            min_samples: 4,
            metric: Metric::CosineDistance,
        };
        let assignment = hdbscan(&store, &params).unwrap();
        assert_eq!(assignment.num_clusters(), 1);
        assert_eq!(assignment.noise_count(), 0);
    }

    #[test]
    fn too_few_points_rejected() {
        let (store, _) = blob_store(&[(0.0, 0.0)], 3, 0.01, &[], 3);
        let err = hdbscan(&store, &HdbscanParams::default()).unwrap_err();
        assert!(matches!(err, ClusterError::TooFewPoints { .. }));
    }

    #[test]
    fn deterministic_and_order_invariant() {
        let (store, _) = blob_store(&[(0.0, 0.0), (8.0, 8.0)], 7, 0.2, &[(30.0, -30.0)], 4);
        let params = HdbscanParams {
            min_cluster_size: 4,
            min_samples: 2,
            metric: Metric::Euclidean,
        };
        let first = hdbscan(&store, &params).unwrap();
        let second = hdbscan(&store, &params).unwrap();
        assert_eq!(first, second);

        // Same records fed in reversed order: the store canonicalizes, so
        // the assignment is identical.
        let mut reversed: Vec<Embedding> = store.records().to_vec();
        reversed.reverse();
        let shuffled_store = EmbeddingStore::from_records(reversed, false).unwrap();
        let third = hdbscan(&shuffled_store, &params).unwrap();
        assert_eq!(first, third);
    }

    /// Brute-force minimum spanning weight via Prüfer-sequence enumeration
    /// of all labeled trees (n^(n-2) of them), independent of Prim's.
    fn brute_force_mst_weight(n: usize, dist: &dyn Fn(usize, usize) -> f64) -> f64 {
        fn prufer_to_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
            let mut degree = vec![1usize; n];
            for &s in seq {
                degree[s] += 1;
            }
            let mut edges = Vec::with_capacity(n - 1);
            let mut used = vec![false; n];
            for &s in seq {
                let leaf = (0..n).find(|&v| degree[v] == 1 && !used[v]).unwrap();
                used[leaf] = true;
                edges.push((leaf, s));
                degree[s] -= 1;
                degree[leaf] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1 && !used[v]).collect();
            edges.push((rest[0], rest[1]));
            edges
        }

        if n == 1 {
            return 0.0;
        }
        if n == 2 {
            return dist(0, 1);
        }
        let mut best = f64::INFINITY;
        let mut seq = vec![0usize; n - 2];
        loop {
            let weight: f64 =
                prufer_to_edges(&seq, n).iter().map(|&(a, b)| dist(a, b)).sum();
            best = best.min(weight);
            // Odometer increment over base-n digits.
            let mut pos = 0;
            loop {
                if pos == seq.len() {
                    return best;
                }
                seq[pos] += 1;
                if seq[pos] < n {
                    break;
                }
                seq[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn mst_weight_matches_exhaustive_tree_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..8 {
            let n = rng.gen_range(2..=7);
            let points: Vec<(f64, f64)> =
                (0..n).map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))).collect();
            let dist = |a: usize, b: usize| -> f64 {
                let dx = points[a].0 - points[b].0;
                let dy = points[a].1 - points[b].1;
                (dx * dx + dy * dy).sqrt()
            };
            let mst = minimum_spanning_tree(n, dist);
            let total: f64 = mst.iter().map(|e| e.weight).sum();
            let expected = brute_force_mst_weight(n, &dist);
            assert!((total - expected).abs() < 1e-9, "trial {trial}: {total} vs {expected}");
        }
    }
}
