//! Mixed-task training manifests and the joint-loss weighting that sits
//! over them.
//!
//! The combined objective is `L = alpha * L_GLSC + (1 - alpha) * L_SDR`.
//! Alpha weights losses, not sample counts: the manifest always contains
//! every sample of both tasks and records alpha as metadata (a `#alpha=`
//! header line) for the downstream trainer. No published value for alpha
//! exists; the default 0.5 is a configuration knob, not a validated choice.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pipeline::{GlscLabel, SegmentRecord, TurnGroup};
use crate::sot::{self, SotError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ManifestError {
    #[error("loss values must be finite")]
    NonFinite,
    #[error("loss values must be non-negative")]
    NegativeLoss,
    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("segment {segment_id:?} has no label")]
    UnlabeledSegment { segment_id: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Sot(#[from] SotError),
}

/// The joint-loss weighting coefficient, confined to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLossSpec {
    alpha: f64,
}

impl JointLossSpec {
    pub fn new(alpha: f64) -> Result<Self, ManifestError> {
        if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
            return Err(ManifestError::InvalidAlpha(alpha));
        }
        Ok(JointLossSpec { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for JointLossSpec {
    fn default() -> Self {
        JointLossSpec { alpha: 0.5 }
    }
}

/// `alpha * l_glsc + (1 - alpha) * l_sdr`. At the boundaries the untouched
/// loss is returned exactly (no arithmetic applied).
pub fn combine_loss(spec: &JointLossSpec, l_glsc: f64, l_sdr: f64) -> Result<f64, ManifestError> {
    if !(l_glsc.is_finite() && l_sdr.is_finite()) {
        return Err(ManifestError::NonFinite);
    }
    if l_glsc < 0.0 || l_sdr < 0.0 {
        return Err(ManifestError::NegativeLoss);
    }
    if spec.alpha == 0.0 {
        return Ok(l_sdr);
    }
    if spec.alpha == 1.0 {
        return Ok(l_glsc);
    }
    Ok(spec.alpha * l_glsc + (1.0 - spec.alpha) * l_sdr)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Sdr,
    Glsc,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Sdr => "SDR",
            Task::Glsc => "GLSC",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SDR" => Ok(Task::Sdr),
            "GLSC" => Ok(Task::Glsc),
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

/// One training sample: a strict-parseable serialized target plus the
/// audio locator (session id and time span) and a provenance string.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub task: Task,
    pub session_id: String,
    pub start: f64,
    pub end: f64,
    pub target: String,
    pub source: String,
}

/// Serializes one entry per turn group (SDR) and per labeled segment
/// (GLSC), then applies a deterministic seeded shuffle. The output is a
/// bijection onto the inputs: no drops, no duplicates.
pub fn build_manifest(
    groups: &[TurnGroup],
    segments: &[SegmentRecord],
    labels: &BTreeMap<String, GlscLabel>,
    resolution: f64,
    shuffle_seed: u64,
) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut entries = Vec::with_capacity(groups.len() + segments.len());
    for (index, group) in groups.iter().enumerate() {
        entries.push(ManifestEntry {
            task: Task::Sdr,
            session_id: group.session_id.clone(),
            start: group.start,
            end: group.end,
            target: sot::serialize_sdr(group, resolution)?,
            source: format!("sdr:{}:{}", group.session_id, index),
        });
    }
    for segment in segments {
        let label = labels.get(&segment.segment_id).ok_or_else(|| {
            ManifestError::UnlabeledSegment { segment_id: segment.segment_id.clone() }
        })?;
        entries.push(ManifestEntry {
            task: Task::Glsc,
            session_id: segment.session_id.clone(),
            start: segment.start,
            end: segment.end,
            target: sot::serialize_glsc(segment, label),
            source: format!("glsc:{}", segment.segment_id),
        });
    }

    // Fisher-Yates with a pinned generator; same seed, same order, always.
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    for i in (1..entries.len()).rev() {
        let j = rng.gen_range(0..=i);
        entries.swap(i, j);
    }
    Ok(entries)
}

/// Writes the manifest TSV: a `#alpha=` metadata header, then one entry
/// per line with fields `task  session_id  start  end  target  source`.
pub fn write_manifest<W: Write>(
    entries: &[ManifestEntry],
    alpha: f64,
    mut sink: W,
) -> std::io::Result<()> {
    writeln!(sink, "#alpha={alpha}")?;
    for e in entries {
        writeln!(
            sink,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.task.as_str(),
            e.session_id,
            e.start,
            e.end,
            e.target,
            e.source
        )?;
    }
    Ok(())
}

/// Reads a manifest written by [`write_manifest`]; returns alpha and the
/// entries.
pub fn read_manifest(text: &str) -> Result<(f64, Vec<ManifestEntry>), ManifestError> {
    let mut alpha = None;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        let parse_err = |message: String| ManifestError::Parse { line: line_number, message };
        if let Some(value) = line.strip_prefix("#alpha=") {
            alpha = Some(
                value.parse::<f64>().map_err(|e| parse_err(format!("bad alpha: {e}")))?,
            );
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(parse_err(format!("expected 6 fields, found {}", fields.len())));
        }
        entries.push(ManifestEntry {
            task: fields[0].parse().map_err(parse_err)?,
            session_id: fields[1].to_string(),
            start: fields[2].parse().map_err(|e| parse_err(format!("bad start: {e}")))?,
            end: fields[3].parse().map_err(|e| parse_err(format!("bad end: {e}")))?,
            target: fields[4].to_string(),
            source: fields[5].to_string(),
        });
    }
    let alpha = alpha.ok_or_else(|| ManifestError::Parse {
        line: 0,
        message: "missing #alpha= header".into(),
    })?;
    Ok((alpha, entries))
}
