//! Evaluation metrics and training-label construction for multi-speaker
//! speech transcription.
//!
//! The crate has two halves that share one set of data types:
//!
//! * **Evaluation** — token alignment and WER ([`text_metrics`]), plus the
//!   speaker-attributed metrics cpWER, Δcp and SCA ([`perm_metrics`]), which
//!   score "who spoke what" by solving an optimal speaker assignment.
//! * **Label construction** — a pipeline ([`pipeline`]) that extracts
//!   non-overlapping single-speaker segments, filters them by ASR quality,
//!   clusters their speaker embeddings ([`embedding`], [`clustering`]), and
//!   derives hierarchical global/local speaker labels. [`sot`] serializes
//!   training targets and parses model outputs; [`manifest`] assembles
//!   mixed-task training manifests.
//!
//! [`synth`] generates fully deterministic synthetic corpora with known
//! ground truth, used as the oracle for every metric and clustering routine.
//!
//! The `glsc` binary (in the companion `glsc-cli` crate) exposes all of this
//! as subcommands. A narrative guide with runnable examples lives in the
//! `book/` directory of the repository; its code snippets are compiled and
//! run as doc-tests of this crate.

mod assignment;
pub mod clustering;
pub mod embedding;
pub mod io;
pub mod manifest;
pub mod perm_metrics;
pub mod pipeline;
pub mod session;
pub mod sot;
pub mod synth;
pub mod text_metrics;

#[cfg(doctest)]
mod book;

pub use session::{Session, Utterance};
pub use text_metrics::{align, tokenize, wer, AlignmentStats, Token, TokenizeMode};
