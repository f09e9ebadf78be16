//! Tokenization and token-level alignment producing error-count statistics
//! and word error rate.
//!
//! WER here is the standard unit-cost definition:
//! `(substitutions + deletions + insertions) / reference length`. Alignment
//! tie-breaking is fixed (match/substitution over deletion over insertion in
//! backtrace order) so the error decomposition is deterministic across
//! platforms — the insertion count gates the data-pipeline quality filter, so
//! it must not depend on which minimum-cost alignment the DP happens to find.

use std::fmt;

use crate::session::Session;

/// A single normalized token: non-empty, no whitespace code points.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    /// Builds a token, rejecting empty strings and internal whitespace.
    pub fn new(text: impl Into<String>) -> Result<Self, InvalidToken> {
        let text = text.into();
        if text.is_empty() {
            return Err(InvalidToken::Empty);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(InvalidToken::Whitespace(text));
        }
        Ok(Token(text))
    }

    /// Internal constructor for text the tokenizer already validated.
    fn from_normalized(text: String) -> Self {
        debug_assert!(!text.is_empty() && !text.chars().any(char::is_whitespace));
        Token(text)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidToken {
    #[error("token must not be empty")]
    Empty,
    #[error("token contains whitespace: {0:?}")]
    Whitespace(String),
}

/// How raw text is split into tokens.
///
/// `Auto` is the default: CJK code points become one token each (character
/// error rate semantics for Mandarin), runs of everything else are split on
/// whitespace (word error rate semantics for English). Both explicit modes
/// are exposed because published numbers for Mandarin corpora are sometimes
/// word-based and sometimes character-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TokenizeMode {
    Word,
    Char,
    #[default]
    Auto,
}

impl TokenizeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenizeMode::Word => "word",
            TokenizeMode::Char => "char",
            TokenizeMode::Auto => "auto",
        }
    }
}

impl std::str::FromStr for TokenizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word" => Ok(TokenizeMode::Word),
            "char" => Ok(TokenizeMode::Char),
            "auto" => Ok(TokenizeMode::Auto),
            other => Err(format!("unknown tokenize mode {other:?} (expected word|char|auto)")),
        }
    }
}

/// CJK code points that `Auto` mode tokenizes per character: the unified
/// ideograph blocks plus kana and hangul syllables.
fn is_cjk(c: char) -> bool {
    matches!(u32::from(c),
        0x3040..=0x30FF      // hiragana, katakana
        | 0x3400..=0x4DBF    // CJK extension A
        | 0x4E00..=0x9FFF    // CJK unified ideographs
        | 0xAC00..=0xD7AF    // hangul syllables
        | 0xF900..=0xFAFF    // CJK compatibility ideographs
        | 0x20000..=0x2FA1F  // CJK extensions B..F, compatibility supplement
    )
}

/// Lowercases and strips leading/trailing non-alphanumeric code points.
/// Returns `None` when nothing remains (punctuation-only input).
fn normalize_word(raw: &str) -> Option<String> {
    let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
    if trimmed.is_empty() {
        return None;
    }
    Some(trimmed.to_lowercase())
}

/// One token per non-whitespace code point; punctuation code points dropped.
fn normalize_char(c: char) -> Option<String> {
    if !c.is_alphanumeric() {
        return None;
    }
    Some(c.to_lowercase().collect())
}

/// Splits `text` into normalized tokens. Empty input yields no tokens;
/// output order preserves input order.
pub fn tokenize(text: &str, mode: TokenizeMode) -> Vec<Token> {
    let mut tokens = Vec::new();
    match mode {
        TokenizeMode::Word => {
            for word in text.split_whitespace() {
                if let Some(norm) = normalize_word(word) {
                    tokens.push(Token::from_normalized(norm));
                }
            }
        }
        TokenizeMode::Char => {
            for c in text.chars().filter(|c| !c.is_whitespace()) {
                if let Some(norm) = normalize_char(c) {
                    tokens.push(Token::from_normalized(norm));
                }
            }
        }
        TokenizeMode::Auto => {
            let mut pending = String::new();
            let flush = |pending: &mut String, tokens: &mut Vec<Token>| {
                for word in pending.split_whitespace() {
                    if let Some(norm) = normalize_word(word) {
                        tokens.push(Token::from_normalized(norm));
                    }
                }
                pending.clear();
            };
            for c in text.chars() {
                if is_cjk(c) {
                    flush(&mut pending, &mut tokens);
                    if let Some(norm) = normalize_char(c) {
                        tokens.push(Token::from_normalized(norm));
                    }
                } else {
                    pending.push(c);
                }
            }
            flush(&mut pending, &mut tokens);
        }
    }
    tokens
}

/// Error decomposition of one minimum-cost alignment.
///
/// The reference length is not stored; it is always
/// `substitutions + deletions + correct` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AlignmentStats {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub correct: usize,
}

impl AlignmentStats {
    /// Number of reference tokens.
    pub fn ref_len(&self) -> usize {
        self.substitutions + self.deletions + self.correct
    }

    /// Total error count `S + D + I`.
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// Pools counts from another alignment (micro-average accumulation).
    pub fn absorb(&mut self, other: &AlignmentStats) {
        self.substitutions += other.substitutions;
        self.deletions += other.deletions;
        self.insertions += other.insertions;
        self.correct += other.correct;
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Levenshtein alignment with unit costs, returning the error decomposition
/// of one minimum-cost alignment.
///
/// When several alignments reach the minimum cost, the backtrace prefers
/// match/substitution over deletion over insertion at every DP cell, which
/// makes the decomposition deterministic.
pub fn align(reference: &[Token], hypothesis: &[Token]) -> AlignmentStats {
    let n = reference.len();
    let m = hypothesis.len();
    let width = m + 1;
    let mut dist = vec![0u32; (n + 1) * width];
    let mut ops = vec![Op::Match; (n + 1) * width];

    for i in 1..=n {
        dist[i * width] = i as u32;
        ops[i * width] = Op::Delete;
    }
    for j in 1..=m {
        dist[j] = j as u32;
        ops[j] = Op::Insert;
    }

    for i in 1..=n {
        for j in 1..=m {
            let hit = reference[i - 1] == hypothesis[j - 1];
            let diag = dist[(i - 1) * width + (j - 1)] + u32::from(!hit);
            let del = dist[(i - 1) * width + j] + 1;
            let ins = dist[i * width + (j - 1)] + 1;
            let (best, op) = if diag <= del && diag <= ins {
                (diag, if hit { Op::Match } else { Op::Substitute })
            } else if del <= ins {
                (del, Op::Delete)
            } else {
                (ins, Op::Insert)
            };
            dist[i * width + j] = best;
            ops[i * width + j] = op;
        }
    }

    let mut stats = AlignmentStats::default();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        match ops[i * width + j] {
            Op::Match => {
                stats.correct += 1;
                i -= 1;
                j -= 1;
            }
            Op::Substitute => {
                stats.substitutions += 1;
                i -= 1;
                j -= 1;
            }
            Op::Delete => {
                stats.deletions += 1;
                i -= 1;
            }
            Op::Insert => {
                stats.insertions += 1;
                j -= 1;
            }
        }
    }
    stats
}

/// Minimum edit distance only, in O(min(n,m)) memory. Equals
/// `align(reference, hypothesis).errors()`; used where the decomposition is
/// not needed (e.g. speaker-pair cost matrices).
pub fn edit_distance(reference: &[Token], hypothesis: &[Token]) -> usize {
    let (short, long) = if reference.len() <= hypothesis.len() {
        (reference, hypothesis)
    } else {
        (hypothesis, reference)
    };
    if short.is_empty() {
        return long.len();
    }
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut curr = vec![0usize; short.len() + 1];
    for (i, lt) in long.iter().enumerate() {
        curr[0] = i + 1;
        for (j, st) in short.iter().enumerate() {
            let sub = prev[j] + usize::from(lt != st);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// `(S + D + I) / ref_len`. A zero-length reference yields `0.0` when there
/// are no errors, and `f64::INFINITY` (the "undefined" report sentinel) when
/// insertions exist — degenerate segments must not abort a pipeline run.
pub fn wer(stats: &AlignmentStats) -> f64 {
    let ref_len = stats.ref_len();
    if ref_len == 0 {
        if stats.errors() == 0 {
            return 0.0;
        }
        return f64::INFINITY;
    }
    stats.errors() as f64 / ref_len as f64
}

/// Alignment of two sessions with speaker identities ignored: utterances are
/// concatenated in chronological order — sorted by (start, end, input
/// order) — and aligned as single token streams.
pub fn session_alignment(reference: &Session, hypothesis: &Session, mode: TokenizeMode) -> AlignmentStats {
    align(&concat_session(reference, mode), &concat_session(hypothesis, mode))
}

/// Speaker-agnostic session-level WER; see [`session_alignment`].
pub fn session_wer(reference: &Session, hypothesis: &Session, mode: TokenizeMode) -> f64 {
    wer(&session_alignment(reference, hypothesis, mode))
}

fn concat_session(session: &Session, mode: TokenizeMode) -> Vec<Token> {
    let mut tokens = Vec::new();
    for idx in session.chronological_order() {
        tokens.extend(tokenize(&session.utterances[idx].text, mode));
    }
    tokens
}
