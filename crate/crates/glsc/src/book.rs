//! Doc-test harness for the book chapters (`book/src/*.md`): each chapter's
//! Rust code fences compile and run under `cargo test --doc`, keeping the
//! guide in sync with the crate.
