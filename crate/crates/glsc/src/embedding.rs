//! Speaker-embedding storage and the vector arithmetic used by clustering
//! and cluster merging.
//!
//! Embeddings arrive from files (extraction itself is outside this crate).
//! Vectors are unit-normalized on load by default, because speaker
//! embeddings are conventionally compared by cosine and normalization makes
//! Euclidean K-means approximately cosine-consistent; pass
//! `normalize = false` (the CLI's `--no-normalize`) to ingest vectors as-is.
//!
//! Two wire formats are supported:
//!
//! * text — UTF-8 lines `segment_id<TAB>speaker_id<TAB>v1 v2 ... vd`, with
//!   `#`-prefixed comment lines ignored;
//! * binary — magic `GLSCEMB1`, little-endian `u32` record count, `u32`
//!   dimension, then per record a `u16`-length-prefixed segment id, a
//!   `u16`-length-prefixed speaker id, and `d` IEEE-754 `f32` values.

use std::collections::HashMap;
use std::io::{Read, Write};

/// Normalizing a vector whose norm is already within this bound of 1 is
/// skipped, so re-loading a previously saved store is bit-stable. The bound
/// comfortably exceeds the worst-case norm drift of an f32-rounded unit
/// vector (~1.2e-7).
const UNIT_NORM_TOLERANCE: f64 = 1e-6;

pub const BINARY_MAGIC: &[u8; 8] = b"GLSCEMB1";

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch for {segment_id:?}: expected {expected}, found {found}")]
    DimMismatch { segment_id: String, expected: usize, found: usize },
    #[error("bad magic bytes: not a GLSCEMB1 embedding file")]
    BadMagic,
    #[error("non-finite vector component for {segment_id:?}")]
    NonFinite { segment_id: String },
    #[error("duplicate segment id {0:?}")]
    DupSegmentId(String),
    #[error("zero-norm vector for {context}")]
    ZeroVector { context: String },
    #[error("centroid of an empty member list")]
    EmptyCluster,
    #[error("identifier {0:?} exceeds the 64 KiB binary-format limit")]
    IdTooLong(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("truncated binary embedding file")]
    Truncated,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One identified embedding vector. `speaker_id` is the dataset's
/// ground-truth speaker for the segment, carried along for label
/// construction and synthetic-truth checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub segment_id: String,
    pub speaker_id: String,
    pub vector: Vec<f64>,
}

/// Validated, immutable collection of embeddings with a uniform dimension.
/// Records are kept sorted by `segment_id`; that order is the canonical
/// point order every clustering routine relies on for determinism.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    records: Vec<Embedding>,
    index: HashMap<String, usize>,
    normalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingFormat {
    Text,
    Binary,
}

fn norm(vector: &[f64]) -> f64 {
    vector.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl EmbeddingStore {
    /// Validates records and builds a store. Checks: uniform dimension,
    /// finite components, positive norm, unique segment ids. With
    /// `normalize`, vectors are scaled to unit norm unless already within
    /// [`UNIT_NORM_TOLERANCE`] of it.
    pub fn from_records(
        mut records: Vec<Embedding>,
        normalize: bool,
    ) -> Result<Self, EmbeddingError> {
        records.sort_by(|a, b| a.segment_id.cmp(&b.segment_id));
        let dim = records.first().map_or(0, |r| r.vector.len());
        let mut index = HashMap::with_capacity(records.len());
        for (i, record) in records.iter_mut().enumerate() {
            if record.vector.len() != dim {
                return Err(EmbeddingError::DimMismatch {
                    segment_id: record.segment_id.clone(),
                    expected: dim,
                    found: record.vector.len(),
                });
            }
            if record.vector.iter().any(|x| !x.is_finite()) {
                return Err(EmbeddingError::NonFinite { segment_id: record.segment_id.clone() });
            }
            let n = norm(&record.vector);
            if n == 0.0 {
                return Err(EmbeddingError::ZeroVector {
                    context: format!("segment {:?}", record.segment_id),
                });
            }
            if normalize && (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
                for x in &mut record.vector {
                    *x /= n;
                }
            }
            if index.insert(record.segment_id.clone(), i).is_some() {
                return Err(EmbeddingError::DupSegmentId(record.segment_id.clone()));
            }
        }
        Ok(EmbeddingStore { dim, records, index, normalized: normalize })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether unit normalization was applied at load.
    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// Records in canonical (sorted segment id) order.
    pub fn records(&self) -> &[Embedding] {
        &self.records
    }

    pub fn get(&self, segment_id: &str) -> Option<&Embedding> {
        self.index.get(segment_id).map(|&i| &self.records[i])
    }

    /// Sub-store restricted to `segment_ids`; fails with the first missing
    /// id so pipeline callers can report it.
    pub fn subset<'a, I>(&self, segment_ids: I) -> Result<EmbeddingStore, MissingSegment>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut records = Vec::new();
        for id in segment_ids {
            match self.get(id) {
                Some(record) => records.push(record.clone()),
                None => return Err(MissingSegment(id.to_string())),
            }
        }
        // Validation already held for the parent store.
        Ok(EmbeddingStore::from_records(records, false)
            .map(|mut s| {
                s.normalized = self.normalized;
                s
            })
            .expect("subset of a valid store is valid"))
    }
}

/// A requested segment id with no stored vector.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no embedding stored for segment {0:?}")]
pub struct MissingSegment(pub String);

/// Reads a store from either wire format. See the module docs for the
/// format definitions.
pub fn load_embeddings<R: Read>(
    mut source: R,
    format: EmbeddingFormat,
    normalize: bool,
) -> Result<EmbeddingStore, EmbeddingError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let records = match format {
        EmbeddingFormat::Text => parse_text(&bytes)?,
        EmbeddingFormat::Binary => parse_binary(&bytes)?,
    };
    EmbeddingStore::from_records(records, normalize)
}

/// Sniffs the wire format from leading bytes (binary magic, else text).
pub fn detect_format(bytes: &[u8]) -> EmbeddingFormat {
    if bytes.starts_with(BINARY_MAGIC) {
        EmbeddingFormat::Binary
    } else {
        EmbeddingFormat::Text
    }
}

fn parse_text(bytes: &[u8]) -> Result<Vec<Embedding>, EmbeddingError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| EmbeddingError::Parse { line: 0, message: format!("invalid UTF-8: {e}") })?;
    let mut records = Vec::new();
    let mut dim: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line_number = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (segment_id, speaker_id, values) =
            match (fields.next(), fields.next(), fields.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => {
                    return Err(EmbeddingError::Parse {
                        line: line_number,
                        message: "expected segment_id<TAB>speaker_id<TAB>values".into(),
                    })
                }
            };
        let vector = values
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>().map_err(|e| EmbeddingError::Parse {
                    line: line_number,
                    message: format!("bad float {v:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if vector.is_empty() {
            return Err(EmbeddingError::Parse {
                line: line_number,
                message: "empty vector".into(),
            });
        }
        match dim {
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(EmbeddingError::DimMismatch {
                    segment_id: segment_id.to_string(),
                    expected: d,
                    found: vector.len(),
                })
            }
            Some(_) => {}
        }
        records.push(Embedding {
            segment_id: segment_id.to_string(),
            speaker_id: speaker_id.to_string(),
            vector,
        });
    }
    Ok(records)
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<Embedding>, EmbeddingError> {
    struct Cursor<'a> {
        bytes: &'a [u8],
        pos: usize,
    }
    impl<'a> Cursor<'a> {
        fn take(&mut self, n: usize) -> Result<&'a [u8], EmbeddingError> {
            if self.bytes.len() - self.pos < n {
                return Err(EmbeddingError::Truncated);
            }
            let head = &self.bytes[self.pos..self.pos + n];
            self.pos += n;
            Ok(head)
        }
        fn take_u16(&mut self) -> Result<usize, EmbeddingError> {
            Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()) as usize)
        }
        fn take_u32(&mut self) -> Result<usize, EmbeddingError> {
            Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
        }
        fn take_string(&mut self, what: &str) -> Result<String, EmbeddingError> {
            let len = self.take_u16()?;
            String::from_utf8(self.take(len)?.to_vec()).map_err(|e| EmbeddingError::Parse {
                line: 0,
                message: format!("{what} not UTF-8: {e}"),
            })
        }
        fn remaining(&self) -> usize {
            self.bytes.len() - self.pos
        }
    }

    let mut cursor = Cursor { bytes, pos: 0 };
    if cursor.take(8)? != BINARY_MAGIC {
        return Err(EmbeddingError::BadMagic);
    }
    let count = cursor.take_u32()?;
    let dim = cursor.take_u32()?;

    let mut records = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let segment_id = cursor.take_string("segment id")?;
        let speaker_id = cursor.take_string("speaker id")?;
        let raw = cursor.take(dim.checked_mul(4).ok_or(EmbeddingError::Truncated)?)?;
        let vector = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        records.push(Embedding { segment_id, speaker_id, vector });
    }
    if cursor.remaining() != 0 {
        return Err(EmbeddingError::Parse {
            line: 0,
            message: format!("{} trailing bytes after the last record", cursor.remaining()),
        });
    }
    Ok(records)
}

/// Writes the store in the requested format, records in canonical order.
/// Saving then re-loading then saving again is byte-identical.
pub fn save_embeddings<W: Write>(
    store: &EmbeddingStore,
    mut sink: W,
    format: EmbeddingFormat,
) -> Result<(), EmbeddingError> {
    match format {
        EmbeddingFormat::Text => {
            for record in store.records() {
                let values: Vec<String> =
                    record.vector.iter().map(|v| format!("{v}")).collect();
                writeln!(
                    sink,
                    "{}\t{}\t{}",
                    record.segment_id,
                    record.speaker_id,
                    values.join(" ")
                )?;
            }
        }
        EmbeddingFormat::Binary => {
            sink.write_all(BINARY_MAGIC)?;
            sink.write_all(&(store.len() as u32).to_le_bytes())?;
            sink.write_all(&(store.dim() as u32).to_le_bytes())?;
            for record in store.records() {
                for id in [&record.segment_id, &record.speaker_id] {
                    let bytes = id.as_bytes();
                    if bytes.len() > u16::MAX as usize {
                        return Err(EmbeddingError::IdTooLong(id.clone()));
                    }
                    sink.write_all(&(bytes.len() as u16).to_le_bytes())?;
                    sink.write_all(bytes)?;
                }
                for v in &record.vector {
                    sink.write_all(&(*v as f32).to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]` against rounding.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    assert_eq!(a.len(), b.len(), "cosine over mismatched dimensions");
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroVector { context: "cosine similarity input".into() });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Cluster centroid used by the cosine-threshold merge: the arithmetic mean
/// of the members' unit-normalized vectors, re-normalized to unit norm.
/// The mean direction is what cosine geometry calls for; an unnormalized
/// mean would weight members by magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub cluster_id: usize,
    pub vector: Vec<f64>,
    pub member_count: usize,
}

/// Computes the centroid of `members` (see [`Centroid`]). Errors on an
/// empty member list and on a numerically zero mean (e.g. two antipodal
/// unit vectors).
pub fn centroid_of<'a, I>(cluster_id: usize, members: I) -> Result<Centroid, EmbeddingError>
where
    I: IntoIterator<Item = &'a Embedding>,
{
    let mut sum: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for member in members {
        let n = norm(&member.vector);
        if n == 0.0 {
            return Err(EmbeddingError::ZeroVector {
                context: format!("segment {:?}", member.segment_id),
            });
        }
        if sum.is_empty() {
            sum = vec![0.0; member.vector.len()];
        }
        for (acc, x) in sum.iter_mut().zip(&member.vector) {
            *acc += x / n;
        }
        count += 1;
    }
    if count == 0 {
        return Err(EmbeddingError::EmptyCluster);
    }
    for acc in &mut sum {
        *acc /= count as f64;
    }
    let n = norm(&sum);
    if n < 1e-12 {
        return Err(EmbeddingError::ZeroVector {
            context: format!("centroid of cluster {cluster_id}"),
        });
    }
    for acc in &mut sum {
        *acc /= n;
    }
    Ok(Centroid { cluster_id, vector: sum, member_count: count })
}
