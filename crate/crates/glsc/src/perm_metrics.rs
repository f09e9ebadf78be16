//! Speaker-attributed metrics: cpWER via an optimal speaker assignment,
//! the diarization indicator Δcp = cpWER − WER, and speaker count accuracy.
//!
//! cpWER concatenates each speaker's utterances in chronological order and
//! pairs reference speakers with hypothesis speakers so that the total edit
//! distance is minimal. Unequal speaker counts are handled by padding the
//! smaller side with EMPTY speakers whose token stream is empty, so an
//! unmatched reference speaker costs a full deletion of their stream and a
//! spurious hypothesis speaker a full insertion.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::assignment;
use crate::session::Session;
use crate::text_metrics::{self, edit_distance, tokenize, Token, TokenizeMode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    /// cpWER is undefined: the reference session has zero tokens while the
    /// hypothesis has some. Reported as a sentinel at the corpus level; the
    /// run continues.
    #[error("cpWER undefined for session {session_id:?}: empty reference against non-empty hypothesis")]
    EmptyReference { session_id: String },
    #[error("metric undefined over an empty corpus")]
    EmptyCorpus,
    #[error("session {session_id:?} present only on the {side} side")]
    UnpairedSession { session_id: String, side: &'static str },
    #[error("duplicate session id {session_id:?} on the {side} side")]
    DuplicateSession { session_id: String, side: &'static str },
}

/// A perfect matching between reference and hypothesis speakers; `None`
/// denotes an EMPTY pad on the shorter side. Every real speaker of either
/// side appears exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SpeakerMapping {
    pub pairs: Vec<MappingPair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MappingPair {
    #[serde(rename = "ref")]
    pub ref_speaker: Option<String>,
    #[serde(rename = "hyp")]
    pub hyp_speaker: Option<String>,
}

impl SpeakerMapping {
    /// The mapping restricted to pairs where both sides are real speakers.
    pub fn real_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().filter_map(|p| {
            Some((p.ref_speaker.as_deref()?, p.hyp_speaker.as_deref()?))
        })
    }
}

/// Per-speaker token streams: utterances grouped by speaker, each group
/// sorted by (start, end, input order) and token-concatenated.
pub fn concat_by_speaker(session: &Session, mode: TokenizeMode) -> BTreeMap<String, Vec<Token>> {
    let mut streams: BTreeMap<String, Vec<Token>> = BTreeMap::new();
    for idx in session.chronological_order() {
        let utt = &session.utterances[idx];
        streams
            .entry(utt.speaker_id.clone())
            .or_default()
            .extend(tokenize(&utt.text, mode));
    }
    streams
}

/// Raw material of one cpWER evaluation: the matched edit-distance total,
/// the denominators, and the achieving speaker mapping. Exposed so corpus
/// pooling can micro-average counts across sessions.
#[derive(Debug, Clone, PartialEq)]
pub struct CpAlignment {
    pub cost: u64,
    pub ref_tokens: usize,
    pub hyp_tokens: usize,
    pub mapping: SpeakerMapping,
}

impl CpAlignment {
    /// The cpWER ratio, or the `f64::INFINITY` "undefined" sentinel when
    /// the reference is empty but errors exist.
    pub fn ratio(&self) -> f64 {
        if self.ref_tokens == 0 {
            if self.cost == 0 {
                return 0.0;
            }
            return f64::INFINITY;
        }
        self.cost as f64 / self.ref_tokens as f64
    }
}

struct CostMatrix {
    ref_ids: Vec<Option<String>>,
    hyp_ids: Vec<Option<String>>,
    cost: Vec<Vec<u64>>,
    ref_tokens: usize,
    hyp_tokens: usize,
}

fn build_cost_matrix(reference: &Session, hypothesis: &Session, mode: TokenizeMode) -> CostMatrix {
    let ref_streams = concat_by_speaker(reference, mode);
    let hyp_streams = concat_by_speaker(hypothesis, mode);
    let n = ref_streams.len().max(hyp_streams.len());

    let empty: Vec<Token> = Vec::new();
    let mut ref_ids: Vec<Option<String>> = ref_streams.keys().cloned().map(Some).collect();
    let mut hyp_ids: Vec<Option<String>> = hyp_streams.keys().cloned().map(Some).collect();
    // EMPTY pads sort after every real id, so the greedy tie-break below
    // always prefers matching real speakers first.
    ref_ids.resize(n, None);
    hyp_ids.resize(n, None);

    let ref_stream = |id: &Option<String>| id.as_ref().map_or(&empty, |id| &ref_streams[id]);
    let hyp_stream = |id: &Option<String>| id.as_ref().map_or(&empty, |id| &hyp_streams[id]);

    let cost = ref_ids
        .iter()
        .map(|ri| {
            let r = ref_stream(ri);
            hyp_ids.iter().map(|hi| edit_distance(r, hyp_stream(hi)) as u64).collect()
        })
        .collect();

    CostMatrix {
        cost,
        ref_tokens: ref_ids.iter().map(|id| ref_stream(id).len()).sum(),
        hyp_tokens: hyp_ids.iter().map(|id| hyp_stream(id).len()).sum(),
        ref_ids,
        hyp_ids,
    }
}

/// Among all minimum-cost matchings, fixes the lexicographically smallest
/// (ref, hyp) pair list: rows in ref-id order, each greedily taking the
/// smallest hyp id that still permits an optimal completion.
fn lexicographic_optimal(cost: &[Vec<u64>]) -> (u64, Vec<usize>) {
    let n = cost.len();
    let (optimal, _) = assignment::minimize(cost);
    let mut used = vec![false; n];
    let mut cols = Vec::with_capacity(n);
    let mut remaining = optimal;
    for i in 0..n {
        let mut chosen = None;
        for j in 0..n {
            if used[j] || cost[i][j] > remaining {
                continue;
            }
            let sub: Vec<Vec<u64>> = (i + 1..n)
                .map(|r| (0..n).filter(|&c| !used[c] && c != j).map(|c| cost[r][c]).collect())
                .collect();
            let (rest, _) = assignment::minimize(&sub);
            if cost[i][j] + rest == remaining {
                chosen = Some(j);
                break;
            }
        }
        let j = chosen.expect("an optimal completion always exists");
        used[j] = true;
        remaining -= cost[i][j];
        cols.push(j);
    }
    (optimal, cols)
}

fn mapping_from_cols(matrix: &CostMatrix, cols: &[usize]) -> SpeakerMapping {
    let pairs = matrix
        .ref_ids
        .iter()
        .zip(cols)
        .map(|(r, &j)| MappingPair {
            ref_speaker: r.clone(),
            hyp_speaker: matrix.hyp_ids[j].clone(),
        })
        .collect();
    SpeakerMapping { pairs }
}

/// Full cpWER evaluation of one session pair; never errors. Use
/// [`cpwer`] for the spec-level ratio with the empty-reference error.
pub fn cpwer_alignment(reference: &Session, hypothesis: &Session, mode: TokenizeMode) -> CpAlignment {
    let matrix = build_cost_matrix(reference, hypothesis, mode);
    let (cost, cols) = lexicographic_optimal(&matrix.cost);
    CpAlignment {
        cost,
        ref_tokens: matrix.ref_tokens,
        hyp_tokens: matrix.hyp_tokens,
        mapping: mapping_from_cols(&matrix, &cols),
    }
}

/// Concatenated minimum-permutation WER: minimum total edit distance over
/// speaker pairings divided by the total reference token count.
pub fn cpwer(
    reference: &Session,
    hypothesis: &Session,
    mode: TokenizeMode,
) -> Result<(f64, SpeakerMapping), MetricsError> {
    let alignment = cpwer_alignment(reference, hypothesis, mode);
    if alignment.ref_tokens == 0 && alignment.cost > 0 {
        return Err(MetricsError::EmptyReference { session_id: reference.session_id.clone() });
    }
    Ok((alignment.ratio(), alignment.mapping))
}

/// Brute-force cpWER over every speaker permutation. Factorial in the
/// padded speaker count; retained as the independent oracle for
/// [`cpwer_alignment`] (the `--oracle-check` CLI flag drives it for
/// sessions with few speakers).
pub fn cpwer_exhaustive(reference: &Session, hypothesis: &Session, mode: TokenizeMode) -> CpAlignment {
    let matrix = build_cost_matrix(reference, hypothesis, mode);
    let n = matrix.cost.len();

    fn search(
        cost: &[Vec<u64>],
        row: usize,
        used: &mut [bool],
        current: &mut Vec<usize>,
        current_cost: u64,
        best: &mut (u64, Vec<usize>),
    ) {
        if current_cost >= best.0 {
            return;
        }
        if row == cost.len() {
            *best = (current_cost, current.clone());
            return;
        }
        for col in 0..cost.len() {
            if used[col] {
                continue;
            }
            used[col] = true;
            current.push(col);
            search(cost, row + 1, used, current, current_cost + cost[row][col], best);
            current.pop();
            used[col] = false;
        }
    }

    // Columns are tried in ascending order, so the first permutation
    // reaching the minimum is the lexicographically smallest one — the same
    // tie-break the assignment path uses.
    let mut best = (u64::MAX, Vec::new());
    if n == 0 {
        best = (0, Vec::new());
    } else {
        let mut used = vec![false; n];
        search(&matrix.cost, 0, &mut used, &mut Vec::new(), 0, &mut best);
    }
    CpAlignment {
        cost: best.0,
        ref_tokens: matrix.ref_tokens,
        hyp_tokens: matrix.hyp_tokens,
        mapping: mapping_from_cols(&matrix, &best.1),
    }
}

/// cpWER − WER: the error mass attributable to wrong speaker attribution.
/// Propagates the "undefined" sentinel if either input is non-finite.
pub fn delta_cp(cpwer: f64, wer: f64) -> f64 {
    if !cpwer.is_finite() || !wer.is_finite() {
        return f64::INFINITY;
    }
    cpwer - wer
}

/// Fraction of session pairs whose distinct hypothesis speaker count equals
/// the distinct reference speaker count.
pub fn sca(pairs: &[(&Session, &Session)]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let matches = pairs
        .iter()
        .filter(|(r, h)| r.speaker_ids().len() == h.speaker_ids().len())
        .count();
    Ok(matches as f64 / pairs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionReport {
    pub session_id: String,
    pub wer: f64,
    pub cpwer: f64,
    pub delta_cp: f64,
    pub ref_speaker_count: usize,
    pub hyp_speaker_count: usize,
    pub mapping: SpeakerMapping,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusMetrics {
    pub wer: f64,
    pub cpwer: f64,
    pub delta_cp: f64,
    pub sca: f64,
}

/// Per-session rows plus corpus aggregates. Corpus WER/cpWER pool raw error
/// counts and reference lengths across sessions (micro-average); per-session
/// ratios remain available for macro-style analyses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_session: Vec<SessionReport>,
    pub corpus: CorpusMetrics,
}

impl MetricsReport {
    /// Machine-readable JSON document. Non-finite values ("undefined"
    /// sentinels) serialize as `null`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Human-oriented table; ratios are printed as percentages with two
    /// decimals, undefined values as `undef`.
    pub fn render_table(&self) -> String {
        fn pct(v: f64) -> String {
            if v.is_finite() {
                format!("{:.2}", v * 100.0)
            } else {
                "undef".to_string()
            }
        }
        let mut out = String::new();
        out.push_str(&format!(
            "{:<24} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
            "session", "wer%", "cpwer%", "dcp%", "ref_spk", "hyp_spk"
        ));
        for row in &self.per_session {
            out.push_str(&format!(
                "{:<24} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
                row.session_id,
                pct(row.wer),
                pct(row.cpwer),
                pct(row.delta_cp),
                row.ref_speaker_count,
                row.hyp_speaker_count
            ));
        }
        out.push_str(&format!(
            "{:<24} {:>8} {:>8} {:>8} sca {:.4}\n",
            "corpus",
            pct(self.corpus.wer),
            pct(self.corpus.cpwer),
            pct(self.corpus.delta_cp),
            self.corpus.sca
        ));
        out
    }
}

fn index_sessions<'a>(
    sessions: &'a [Session],
    side: &'static str,
) -> Result<BTreeMap<&'a str, &'a Session>, MetricsError> {
    let mut map = BTreeMap::new();
    for session in sessions {
        if map.insert(session.session_id.as_str(), session).is_some() {
            return Err(MetricsError::DuplicateSession {
                session_id: session.session_id.clone(),
                side,
            });
        }
    }
    Ok(map)
}

/// Evaluates a paired corpus. Sessions are paired by `session_id`; an id
/// present on only one side is an error. Per-session work fans out in
/// parallel; pooled counts are integers, so the result is independent of
/// the worker count.
pub fn evaluate_corpus(
    references: &[Session],
    hypotheses: &[Session],
    mode: TokenizeMode,
) -> Result<MetricsReport, MetricsError> {
    if references.is_empty() && hypotheses.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let ref_map = index_sessions(references, "reference")?;
    let hyp_map = index_sessions(hypotheses, "hypothesis")?;
    for id in ref_map.keys() {
        if !hyp_map.contains_key(id) {
            return Err(MetricsError::UnpairedSession {
                session_id: id.to_string(),
                side: "reference",
            });
        }
    }
    for id in hyp_map.keys() {
        if !ref_map.contains_key(id) {
            return Err(MetricsError::UnpairedSession {
                session_id: id.to_string(),
                side: "hypothesis",
            });
        }
    }

    let pairs: Vec<(&Session, &Session)> =
        ref_map.iter().map(|(id, r)| (*r, hyp_map[id])).collect();

    struct SessionOutcome {
        row: SessionReport,
        wer_errors: usize,
        ref_tokens: usize,
        cp_cost: u64,
    }

    let outcomes: Vec<SessionOutcome> = pairs
        .par_iter()
        .map(|(reference, hypothesis)| {
            let stats = text_metrics::session_alignment(reference, hypothesis, mode);
            let cp = cpwer_alignment(reference, hypothesis, mode);
            let wer = text_metrics::wer(&stats);
            let cpwer = cp.ratio();
            SessionOutcome {
                row: SessionReport {
                    session_id: reference.session_id.clone(),
                    wer,
                    cpwer,
                    delta_cp: delta_cp(cpwer, wer),
                    ref_speaker_count: reference.speaker_ids().len(),
                    hyp_speaker_count: hypothesis.speaker_ids().len(),
                    mapping: cp.mapping.clone(),
                },
                wer_errors: stats.errors(),
                ref_tokens: stats.ref_len(),
                cp_cost: cp.cost,
            }
        })
        .collect();

    let total_ref: usize = outcomes.iter().map(|o| o.ref_tokens).sum();
    let total_wer_errors: usize = outcomes.iter().map(|o| o.wer_errors).sum();
    let total_cp_cost: u64 = outcomes.iter().map(|o| o.cp_cost).sum();

    let pool = |errors: f64| -> f64 {
        if total_ref == 0 {
            if errors == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            errors / total_ref as f64
        }
    };
    let corpus_wer = pool(total_wer_errors as f64);
    let corpus_cpwer = pool(total_cp_cost as f64);

    Ok(MetricsReport {
        corpus: CorpusMetrics {
            wer: corpus_wer,
            cpwer: corpus_cpwer,
            delta_cp: delta_cp(corpus_cpwer, corpus_wer),
            sca: sca(&pairs)?,
        },
        per_session: outcomes.into_iter().map(|o| o.row).collect(),
    })
}
