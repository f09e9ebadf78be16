//! Readers and writers for the toolkit's tab-separated wire formats.
//!
//! All formats are UTF-8, one record per line, `#`-prefixed comment lines
//! and blank lines ignored:
//!
//! * sessions/segments — `session_id  speaker_id  start  end  text`
//!   (seconds as decimals; text must not contain tabs or newlines, which
//!   the line-based format cannot carry);
//! * segment hypotheses — `segment_id  hyp_text`;
//! * labels — `segment_id  speaker_id  L_g  L_u  composite`;
//! * turn groups — `session_id  group_index  start  end  members`
//!   (comma-separated chronological utterance indices within the session).
//!
//! Invariants (`end >= start`, non-empty speaker ids) are enforced here, at
//! the ingestion boundary, so in-memory types can stay plain data.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::pipeline::{compose_label, parse_label, GlscLabel, SegmentRecord, TurnGroup};
use crate::session::{Session, Utterance};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_seconds(field: &str, line: usize, what: &str) -> Result<f64, FormatError> {
    let value: f64 = field
        .parse()
        .map_err(|e| parse_err(line, format!("bad {what} {field:?}: {e}")))?;
    if !value.is_finite() || value < 0.0 {
        return Err(parse_err(line, format!("{what} must be a non-negative finite number")));
    }
    Ok(value)
}

/// Parses a sessions/segments TSV. Sessions come back in order of first
/// appearance, utterances in file order.
pub fn parse_sessions(text: &str) -> Result<Vec<Session>, FormatError> {
    let mut order: Vec<String> = Vec::new();
    let mut sessions: BTreeMap<String, Vec<Utterance>> = BTreeMap::new();
    for (line_number, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(parse_err(
                line_number,
                format!(
                    "expected 5 tab-separated fields (session_id speaker_id start end text), found {}",
                    fields.len()
                ),
            ));
        }
        let (session_id, speaker_id) = (fields[0], fields[1]);
        if session_id.is_empty() {
            return Err(parse_err(line_number, "empty session_id"));
        }
        if speaker_id.is_empty() {
            return Err(parse_err(line_number, "empty speaker_id"));
        }
        let start = parse_seconds(fields[2], line_number, "start time")?;
        let end = parse_seconds(fields[3], line_number, "end time")?;
        if end < start {
            return Err(parse_err(line_number, format!("end {end} before start {start}")));
        }
        if !sessions.contains_key(session_id) {
            order.push(session_id.to_string());
        }
        sessions.entry(session_id.to_string()).or_default().push(Utterance {
            session_id: session_id.to_string(),
            speaker_id: speaker_id.to_string(),
            start,
            end,
            text: fields[4].to_string(),
        });
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let utterances = sessions.remove(&id).unwrap();
            Session::new(id, utterances)
        })
        .collect())
}

pub fn read_sessions(path: &Path) -> Result<Vec<Session>, FormatError> {
    parse_sessions(&std::fs::read_to_string(path)?)
}

pub fn write_sessions<W: Write>(sessions: &[Session], mut sink: W) -> std::io::Result<()> {
    for session in sessions {
        for utt in &session.utterances {
            writeln!(
                sink,
                "{}\t{}\t{}\t{}\t{}",
                utt.session_id, utt.speaker_id, utt.start, utt.end, utt.text
            )?;
        }
    }
    Ok(())
}

/// Parses the per-segment hypothesis TSV (`segment_id  hyp_text`).
/// An empty hypothesis column is allowed (silence recognized as nothing).
pub fn parse_segment_hyps(text: &str) -> Result<BTreeMap<String, String>, FormatError> {
    let mut hyps = BTreeMap::new();
    for (line_number, line) in data_lines(text) {
        let (segment_id, hyp_text) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(line_number, "expected segment_id<TAB>hyp_text"))?;
        if hyp_text.contains('\t') {
            return Err(parse_err(line_number, "hypothesis text must not contain tabs"));
        }
        if hyps.insert(segment_id.to_string(), hyp_text.to_string()).is_some() {
            return Err(parse_err(line_number, format!("duplicate segment id {segment_id:?}")));
        }
    }
    Ok(hyps)
}

pub fn read_segment_hyps(path: &Path) -> Result<BTreeMap<String, String>, FormatError> {
    parse_segment_hyps(&std::fs::read_to_string(path)?)
}

pub fn write_segment_hyps<W: Write>(
    hyps: &BTreeMap<String, String>,
    mut sink: W,
) -> std::io::Result<()> {
    for (segment_id, text) in hyps {
        writeln!(sink, "{segment_id}\t{text}")?;
    }
    Ok(())
}

/// One row of the label output TSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub segment_id: String,
    pub speaker_id: String,
    pub label: GlscLabel,
}

/// Writes `segment_id  speaker_id  L_g  L_u  composite` rows.
pub fn write_labels<W: Write>(rows: &[LabelRow], mut sink: W) -> std::io::Result<()> {
    for row in rows {
        writeln!(
            sink,
            "{}\t{}\t{}\t{}\t{}",
            row.segment_id,
            row.speaker_id,
            row.label.global_id,
            row.label.local_id,
            row.label.composite()
        )?;
    }
    Ok(())
}

/// Parses a labels TSV, cross-checking the composite column against the
/// numeric label columns.
pub fn parse_labels(text: &str) -> Result<Vec<LabelRow>, FormatError> {
    let mut rows = Vec::new();
    for (line_number, line) in data_lines(text) {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(parse_err(
                line_number,
                format!("expected 5 fields (segment_id speaker_id L_g L_u composite), found {}", fields.len()),
            ));
        }
        let global_id: usize = fields[2]
            .parse()
            .map_err(|e| parse_err(line_number, format!("bad L_g: {e}")))?;
        let local_id: usize = fields[3]
            .parse()
            .map_err(|e| parse_err(line_number, format!("bad L_u: {e}")))?;
        let composite = parse_label(fields[4])
            .map_err(|e| parse_err(line_number, e.to_string()))?;
        let label = GlscLabel { global_id, local_id };
        if composite != label {
            return Err(parse_err(
                line_number,
                format!(
                    "composite {:?} does not match L_g={global_id} L_u={local_id}",
                    fields[4]
                ),
            ));
        }
        debug_assert_eq!(fields[4], compose_label(global_id, local_id));
        rows.push(LabelRow {
            segment_id: fields[0].to_string(),
            speaker_id: fields[1].to_string(),
            label,
        });
    }
    Ok(rows)
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>, FormatError> {
    parse_labels(&std::fs::read_to_string(path)?)
}

/// Writes turn groups with their member utterances identified by
/// chronological index within the session.
pub fn write_turn_groups<W: Write>(groups: &[TurnGroup], mut sink: W) -> std::io::Result<()> {
    let mut next_index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut group_index: BTreeMap<&str, usize> = BTreeMap::new();
    for group in groups {
        let counter = next_index.entry(group.session_id.as_str()).or_insert(0);
        let members: Vec<String> = group
            .utterances
            .iter()
            .map(|_| {
                let id = *counter;
                *counter += 1;
                id.to_string()
            })
            .collect();
        let g = group_index.entry(group.session_id.as_str()).or_insert(0);
        writeln!(
            sink,
            "{}\t{}\t{}\t{}\t{}",
            group.session_id,
            g,
            group.start,
            group.end,
            members.join(",")
        )?;
        *g += 1;
    }
    Ok(())
}

/// Writes extracted segments back out in the sessions TSV schema. Segment
/// ids are reproducible from the session content, so plain rows suffice.
pub fn write_segments<W: Write>(segments: &[SegmentRecord], mut sink: W) -> std::io::Result<()> {
    for s in segments {
        writeln!(sink, "{}\t{}\t{}\t{}\t{}", s.session_id, s.speaker_id, s.start, s.end, s.ref_text)?;
    }
    Ok(())
}
