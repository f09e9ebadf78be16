//! End-to-end training-label construction: segment extraction, ASR quality
//! filtering, embedding clustering with centroid merging, and the
//! hierarchical global/local label assignment.
//!
//! The stages compose as: [`extract_segments`] keeps only utterances that
//! overlap nothing else in their session; [`quality_filter`] drops segments
//! whose ASR hypothesis shows WER above 30% or more than 2 insertion errors
//! (both thresholds strict "exceeds", both configurable); the survivors'
//! embeddings are clustered and clusters merged at centroid cosine 0.75;
//! cluster ids become global labels and speakers within each cluster are
//! enumerated into local labels, concatenated as `G{g}-L{u}` composites.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::clustering::{
    self, ClusterAssignment, ClusterError, ClusterLabel, HdbscanParams, KmeansParams,
};
use crate::embedding::EmbeddingStore;
use crate::session::{Session, Utterance};
use crate::text_metrics::{align, tokenize, wer, TokenizeMode};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("segment {segment_id:?} has no ASR hypothesis")]
    MissingHypothesis { segment_id: String },
    #[error("segment {segment_id:?} has no embedding")]
    MissingEmbedding { segment_id: String },
    #[error("segment {segment_id:?} has no speaker entry")]
    MissingSpeaker { segment_id: String },
    #[error("malformed composite label {0:?} (expected G<digits>-L<digits>)")]
    MalformedLabel(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

/// A non-overlapping single-speaker segment cut from a session, optionally
/// carrying the ASR hypothesis used for quality filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    pub segment_id: String,
    pub session_id: String,
    pub speaker_id: String,
    pub start: f64,
    pub end: f64,
    pub ref_text: String,
    pub hyp_text: Option<String>,
}

/// Hierarchical speaker label: the global cluster id and the local speaker
/// index within that cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GlscLabel {
    pub global_id: usize,
    pub local_id: usize,
}

impl GlscLabel {
    pub fn composite(&self) -> String {
        compose_label(self.global_id, self.local_id)
    }
}

/// Canonical composite wire form `G{g}-L{u}`, decimal without padding.
pub fn compose_label(global_id: usize, local_id: usize) -> String {
    format!("G{global_id}-L{local_id}")
}

/// Inverse of [`compose_label`].
pub fn parse_label(text: &str) -> Result<GlscLabel, PipelineError> {
    let malformed = || PipelineError::MalformedLabel(text.to_string());
    let rest = text.strip_prefix('G').ok_or_else(malformed)?;
    let (g, u) = rest.split_once("-L").ok_or_else(malformed)?;
    if g.is_empty() || u.is_empty() || !g.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    Ok(GlscLabel {
        global_id: g.parse().map_err(|_| malformed())?,
        local_id: u.parse().map_err(|_| malformed())?,
    })
}

/// A maximal run of temporally adjacent speaker turns, merged into one
/// training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnGroup {
    pub session_id: String,
    /// Members in (start, end, input order); never empty.
    pub utterances: Vec<Utterance>,
    pub start: f64,
    pub end: f64,
}

/// Keeps exactly the utterances whose half-open interval `[start, end)`
/// intersects no other utterance of the session (touching endpoints do not
/// count as overlap). Segment ids are `{session_id}_{index:04}` with the
/// index enumerating kept segments in chronological order.
pub fn extract_segments(session: &Session) -> Vec<SegmentRecord> {
    let order = session.chronological_order();
    let n = order.len();
    let mut overlapped = vec![false; n];
    for i in 0..n {
        let a = &session.utterances[order[i]];
        for j in i + 1..n {
            let b = &session.utterances[order[j]];
            if b.start >= a.end {
                break;
            }
            // Sorted by start, so the intervals intersect iff both are
            // non-empty and b starts before a ends.
            if a.start < a.end && b.start < b.end {
                overlapped[i] = true;
                overlapped[j] = true;
            }
        }
    }
    order
        .iter()
        .enumerate()
        .filter(|&(i, _)| !overlapped[i])
        .enumerate()
        .map(|(kept_idx, (_, &utt_idx))| {
            let utt = &session.utterances[utt_idx];
            SegmentRecord {
                segment_id: format!("{}_{kept_idx:04}", session.session_id),
                session_id: session.session_id.clone(),
                speaker_id: utt.speaker_id.clone(),
                start: utt.start,
                end: utt.end,
                ref_text: utt.text.clone(),
                hyp_text: None,
            }
        })
        .collect()
}

/// Which quality rule rejected a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    Wer,
    Insertions,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Discard(DiscardReason),
}

/// ASR-based quality gate: discard iff `wer > max_wer` or
/// `insertions > max_insertions` of the reference/hypothesis alignment.
/// Values exactly at a threshold are kept.
pub fn quality_filter(
    segment: &SegmentRecord,
    max_wer: f64,
    max_insertions: usize,
    mode: TokenizeMode,
) -> Result<FilterDecision, PipelineError> {
    let hyp_text = segment.hyp_text.as_deref().ok_or_else(|| {
        PipelineError::MissingHypothesis { segment_id: segment.segment_id.clone() }
    })?;
    let stats = align(&tokenize(&segment.ref_text, mode), &tokenize(hyp_text, mode));
    let wer_exceeds = wer(&stats) > max_wer;
    let ins_exceeds = stats.insertions > max_insertions;
    Ok(match (wer_exceeds, ins_exceeds) {
        (false, false) => FilterDecision::Keep,
        (true, false) => FilterDecision::Discard(DiscardReason::Wer),
        (false, true) => FilterDecision::Discard(DiscardReason::Insertions),
        (true, true) => FilterDecision::Discard(DiscardReason::Both),
    })
}

/// Global labels: the canonical cluster id of each non-noise segment.
/// Noise segments are excluded from the training set (their count is
/// logged and reported by the pipeline).
pub fn assign_global_labels(assignment: &ClusterAssignment) -> BTreeMap<String, usize> {
    let noise = assignment.noise_count();
    if noise > 0 {
        log::info!("excluding {noise} noise segments from label assignment");
    }
    assignment
        .iter()
        .filter_map(|(id, label)| match label {
            ClusterLabel::Cluster(c) => Some((id.to_string(), c)),
            ClusterLabel::Noise => None,
        })
        .collect()
}

/// Local labels: within each cluster, distinct dataset speakers are
/// enumerated 0, 1, 2, ... in order of first appearance under canonical
/// segment ordering; every segment receives its speaker's index. A speaker
/// split across clusters gets independent indices per cluster.
pub fn assign_local_labels(
    assignment: &ClusterAssignment,
    speaker_of: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, usize>, PipelineError> {
    let mut per_cluster: BTreeMap<usize, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for (segment_id, label) in assignment.iter() {
        let ClusterLabel::Cluster(cluster) = label else { continue };
        let speaker = speaker_of
            .get(segment_id)
            .ok_or_else(|| PipelineError::MissingSpeaker { segment_id: segment_id.to_string() })?;
        let seen = per_cluster.entry(cluster).or_default();
        let next = seen.len();
        let local = *seen.entry(speaker.as_str()).or_insert(next);
        labels.insert(segment_id.to_string(), local);
    }
    Ok(labels)
}

/// Scans utterances chronologically, appending each to the open group when
/// its start lies within `gap_tolerance` of the group's end and the merged
/// duration stays within `max_duration`; otherwise a new group opens.
/// Every utterance lands in exactly one group.
pub fn turn_group_segmentation(
    session: &Session,
    gap_tolerance: f64,
    max_duration: f64,
) -> Vec<TurnGroup> {
    let mut groups: Vec<TurnGroup> = Vec::new();
    for idx in session.chronological_order() {
        let utt = session.utterances[idx].clone();
        if let Some(group) = groups.last_mut() {
            let merged_end = group.end.max(utt.end);
            if utt.start <= group.end + gap_tolerance && merged_end - group.start <= max_duration {
                group.end = merged_end;
                group.utterances.push(utt);
                continue;
            }
        }
        groups.push(TurnGroup {
            session_id: session.session_id.clone(),
            start: utt.start,
            end: utt.end,
            utterances: vec![utt],
        });
    }
    groups
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClusterAlgorithm {
    Hdbscan(HdbscanParams),
    Kmeans(KmeansParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub algorithm: ClusterAlgorithm,
    pub merge_threshold: f64,
    pub max_wer: f64,
    pub max_insertions: usize,
    pub mode: TokenizeMode,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            algorithm: ClusterAlgorithm::Hdbscan(HdbscanParams::default()),
            merge_threshold: 0.75,
            max_wer: 0.30,
            max_insertions: 2,
            mode: TokenizeMode::Auto,
        }
    }
}

/// Per-stage accounting. `dropped_overlap + dropped_wer + dropped_insertions
/// + dropped_both + dropped_noise + labeled_segments == input_utterances`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PipelineReport {
    pub input_utterances: usize,
    pub dropped_overlap: usize,
    pub segments_extracted: usize,
    pub dropped_wer: usize,
    pub dropped_insertions: usize,
    pub dropped_both: usize,
    pub kept_after_filter: usize,
    pub clusters_before_merge: usize,
    pub clusters_after_merge: usize,
    pub merges_performed: usize,
    pub dropped_noise: usize,
    pub labeled_segments: usize,
    /// Dataset speakers whose segments landed in more than one cluster
    /// (they carry independent composite labels per cluster).
    pub split_speakers: Vec<String>,
}

impl PipelineReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Everything the pipeline produces: labeled segments (sorted by segment
/// id), their composite labels, the post-merge assignment, and the report.
#[derive(Debug, Clone)]
pub struct GlscDataset {
    pub segments: Vec<SegmentRecord>,
    pub labels: BTreeMap<String, GlscLabel>,
    pub assignment: ClusterAssignment,
    pub report: PipelineReport,
}

/// Runs the full construction over `sessions`: extract -> filter ->
/// cluster -> merge -> global/local labels. `hyps` maps segment ids to ASR
/// hypothesis text; every extracted segment must have one. Embeddings must
/// exist for every segment that survives the filter.
pub fn build_glsc_dataset(
    sessions: &[Session],
    store: &EmbeddingStore,
    hyps: &BTreeMap<String, String>,
    params: &PipelineParams,
) -> Result<GlscDataset, PipelineError> {
    let mut report = PipelineReport::default();
    let mut session_order: Vec<&Session> = sessions.iter().collect();
    session_order.sort_by(|a, b| a.session_id.cmp(&b.session_id));

    let mut kept: Vec<SegmentRecord> = Vec::new();
    for session in session_order {
        report.input_utterances += session.utterances.len();
        let mut segments = extract_segments(session);
        report.dropped_overlap += session.utterances.len() - segments.len();
        report.segments_extracted += segments.len();
        for segment in &mut segments {
            segment.hyp_text = hyps.get(&segment.segment_id).cloned();
            match quality_filter(segment, params.max_wer, params.max_insertions, params.mode)? {
                FilterDecision::Keep => kept.push(segment.clone()),
                FilterDecision::Discard(DiscardReason::Wer) => report.dropped_wer += 1,
                FilterDecision::Discard(DiscardReason::Insertions) => {
                    report.dropped_insertions += 1
                }
                FilterDecision::Discard(DiscardReason::Both) => report.dropped_both += 1,
            }
        }
    }
    report.kept_after_filter = kept.len();

    if kept.is_empty() {
        return Ok(GlscDataset {
            segments: Vec::new(),
            labels: BTreeMap::new(),
            assignment: ClusterAssignment::from_raw(Vec::<(String, Option<usize>)>::new()),
            report,
        });
    }

    let substore = store
        .subset(kept.iter().map(|s| s.segment_id.as_str()))
        .map_err(|missing| PipelineError::MissingEmbedding { segment_id: missing.0 })?;

    let assignment = match &params.algorithm {
        ClusterAlgorithm::Hdbscan(p) => clustering::hdbscan(&substore, p)?,
        ClusterAlgorithm::Kmeans(p) => clustering::kmeans(&substore, p)?,
    };
    report.clusters_before_merge = assignment.num_clusters();
    let merged = clustering::merge_clusters(&assignment, &substore, params.merge_threshold)?;
    report.clusters_after_merge = merged.num_clusters();
    report.merges_performed = report.clusters_before_merge - report.clusters_after_merge;
    report.dropped_noise = merged.noise_count();

    let speaker_of: BTreeMap<String, String> =
        kept.iter().map(|s| (s.segment_id.clone(), s.speaker_id.clone())).collect();
    let global = assign_global_labels(&merged);
    let local = assign_local_labels(&merged, &speaker_of)?;

    let labels: BTreeMap<String, GlscLabel> = global
        .iter()
        .map(|(id, &g)| (id.clone(), GlscLabel { global_id: g, local_id: local[id] }))
        .collect();
    report.labeled_segments = labels.len();

    let mut speaker_clusters: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (id, g) in &global {
        speaker_clusters.entry(speaker_of[id].as_str()).or_default().insert(*g);
    }
    report.split_speakers = speaker_clusters
        .iter()
        .filter(|(_, clusters)| clusters.len() > 1)
        .map(|(speaker, _)| speaker.to_string())
        .collect();
    if !report.split_speakers.is_empty() {
        log::info!(
            "{} dataset speakers are split across clusters: {:?}",
            report.split_speakers.len(),
            report.split_speakers
        );
    }

    let mut segments: Vec<SegmentRecord> =
        kept.into_iter().filter(|s| labels.contains_key(&s.segment_id)).collect();
    segments.sort_by(|a, b| a.segment_id.cmp(&b.segment_id));

    Ok(GlscDataset { segments, labels, assignment: merged, report })
}
