//! Speaker-attributed, time-stamped transcript units — the universal input
//! record for both the evaluation and the label-construction halves of the
//! crate.

/// One speaker turn: who said what, when, in which recording.
///
/// Invariants (`end >= start`, non-empty `speaker_id`, consistent
/// `session_id`) are enforced when files are ingested (see [`crate::io`]);
/// the struct itself stays plain data. Text is kept raw; metric operations
/// tokenize on demand with an explicit [`crate::TokenizeMode`].
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub session_id: String,
    pub speaker_id: String,
    /// Start time in seconds, >= 0.
    pub start: f64,
    /// End time in seconds, >= start.
    pub end: f64,
    pub text: String,
}

/// All utterances of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub session_id: String,
    pub utterances: Vec<Utterance>,
}

impl Session {
    pub fn new(session_id: impl Into<String>, utterances: Vec<Utterance>) -> Self {
        Session { session_id: session_id.into(), utterances }
    }

    /// Indices of `utterances` sorted by (start, end, input order). This is
    /// the canonical chronological order used everywhere tokens are
    /// concatenated, so results do not depend on input file ordering beyond
    /// ties in both timestamps.
    pub fn chronological_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.utterances.len()).collect();
        order.sort_by(|&a, &b| {
            let ua = &self.utterances[a];
            let ub = &self.utterances[b];
            ua.start
                .total_cmp(&ub.start)
                .then(ua.end.total_cmp(&ub.end))
                .then(a.cmp(&b))
        });
        order
    }

    /// Distinct speaker ids, sorted.
    pub fn speaker_ids(&self) -> Vec<&str> {
        let mut ids: Vec<&str> = self.utterances.iter().map(|u| u.speaker_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utt(speaker: &str, start: f64, end: f64) -> Utterance {
        Utterance {
            session_id: "s".into(),
            speaker_id: speaker.into(),
            start,
            end,
            text: String::new(),
        }
    }

    #[test]
    fn chronological_order_breaks_ties_by_end_then_index() {
        let s = Session::new(
            "s",
            vec![utt("a", 1.0, 3.0), utt("b", 1.0, 2.0), utt("c", 0.5, 9.0), utt("d", 1.0, 2.0)],
        );
        assert_eq!(s.chronological_order(), vec![2, 1, 3, 0]);
    }

    #[test]
    fn speaker_ids_sorted_distinct() {
        let s = Session::new("s", vec![utt("b", 0.0, 1.0), utt("a", 1.0, 2.0), utt("b", 2.0, 3.0)]);
        assert_eq!(s.speaker_ids(), vec!["a", "b"]);
    }
}
