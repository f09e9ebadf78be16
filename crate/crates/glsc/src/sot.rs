//! The serialized target-sequence grammar: training targets are emitted in
//! it and model outputs are parsed back out of it for scoring.
//!
//! Grammar (self-contained; no external tokenizer assumed):
//!
//! ```text
//! sdr_sequence  = "<|SDR|>" utterance*
//! utterance     = "<|ts:" TIME "|>" "<|ts:" TIME "|>" "<|spk:" LABEL "|>" TEXT
//! glsc_sequence = "<|GLSC|>" "<|spk:" LABEL "|>" TEXT
//! ```
//!
//! Timestamps are relative to the turn-group start and quantized to the
//! configured resolution (default 0.1 s, rendered with one decimal). The
//! characters `<`, `|` and `\` inside labels and free text are escaped as
//! `<`, `|` and `\` so the grammar stays unambiguous and
//! round-trippable.
//!
//! Parsing has two modes. Strict rejects the first violation with its byte
//! offset and is the contract for training targets. Lenient never fails:
//! malformed constructs are skipped or repaired, each repair recorded as a
//! diagnostic — a model that emits broken tags must still be scoreable.

use crate::pipeline::{GlscLabel, SegmentRecord, TurnGroup};

pub const SDR_TASK_TOKEN: &str = "<|SDR|>";
pub const GLSC_TASK_TOKEN: &str = "<|GLSC|>";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SotError {
    #[error("utterance starts {seconds} s before its group")]
    NegativeRelativeTime { seconds: f64 },
    #[error("malformed sequence at byte {offset}: {message}")]
    Malformed { offset: usize, message: String },
    #[error("resolution {0} is not a positive decimal fraction")]
    UnsupportedResolution(f64),
    #[error("cannot serialize an empty turn group")]
    EmptyGroup,
}

/// One parsed or to-be-serialized SDR utterance; times are group-relative
/// seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SdrItem {
    pub start: f64,
    pub end: f64,
    pub speaker_label: String,
    pub text: String,
}

/// A structured output sequence of either task.
#[derive(Debug, Clone, PartialEq)]
pub enum SotSequence {
    Sdr(Vec<SdrItem>),
    Glsc { label: String, text: String },
}

impl SotSequence {
    pub fn task_token(&self) -> &'static str {
        match self {
            SotSequence::Sdr(_) => SDR_TASK_TOKEN,
            SotSequence::Glsc { .. } => GLSC_TASK_TOKEN,
        }
    }
}

/// One lenient-mode repair: what was wrong and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LenientParse {
    pub sequence: SotSequence,
    pub diagnostics: Vec<Diagnostic>,
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\u005c"),
            '<' => out.push_str("\\u003c"),
            '|' => out.push_str("\\u007c"),
            other => out.push(other),
        }
    }
    out
}

/// Number of decimal digits needed to render multiples of `resolution`
/// exactly (e.g. 0.1 -> 1, 0.25 -> 2, 1.0 -> 0).
fn decimals_for(resolution: f64) -> Result<u32, SotError> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(SotError::UnsupportedResolution(resolution));
    }
    for decimals in 0..=9u32 {
        let scaled = resolution * 10f64.powi(decimals as i32);
        if scaled >= 0.5 && (scaled - scaled.round()).abs() < 1e-9 {
            return Ok(decimals);
        }
    }
    Err(SotError::UnsupportedResolution(resolution))
}

fn render_time(quanta: i64, resolution: f64, decimals: u32) -> String {
    // Work in integer units of 10^-decimals so no float dust leaks into
    // the rendered string.
    let per_quantum = (resolution * 10f64.powi(decimals as i32)).round() as i64;
    let units = quanta * per_quantum;
    if decimals == 0 {
        return units.to_string();
    }
    let base = 10i64.pow(decimals);
    format!("{}.{:0width$}", units / base, units % base, width = decimals as usize)
}

fn quantize(seconds: f64, resolution: f64) -> Result<i64, SotError> {
    let quanta = (seconds / resolution).round();
    if quanta < 0.0 {
        return Err(SotError::NegativeRelativeTime { seconds });
    }
    Ok(quanta as i64)
}

/// Serializes SDR items whose times are already group-relative.
pub fn serialize_sdr_items<'a, I>(items: I, resolution: f64) -> Result<String, SotError>
where
    I: IntoIterator<Item = &'a SdrItem>,
{
    let decimals = decimals_for(resolution)?;
    let mut out = String::from(SDR_TASK_TOKEN);
    for item in items {
        let start = quantize(item.start, resolution)?;
        let end = quantize(item.end, resolution)?;
        out.push_str(&format!(
            "<|ts:{}|><|ts:{}|><|spk:{}|>{}",
            render_time(start, resolution, decimals),
            render_time(end, resolution, decimals),
            escape(&item.speaker_label),
            escape(&item.text),
        ));
    }
    Ok(out)
}

/// Serializes a turn group as an SDR target: utterances in start order,
/// timestamps relative to the group start and quantized to `resolution`.
pub fn serialize_sdr(group: &TurnGroup, resolution: f64) -> Result<String, SotError> {
    if group.utterances.is_empty() {
        return Err(SotError::EmptyGroup);
    }
    let mut order: Vec<usize> = (0..group.utterances.len()).collect();
    order.sort_by(|&a, &b| {
        let (ua, ub) = (&group.utterances[a], &group.utterances[b]);
        ua.start.total_cmp(&ub.start).then(ua.end.total_cmp(&ub.end)).then(a.cmp(&b))
    });
    let items: Vec<SdrItem> = order
        .into_iter()
        .map(|i| {
            let utt = &group.utterances[i];
            SdrItem {
                start: utt.start - group.start,
                end: utt.end - group.start,
                speaker_label: utt.speaker_id.clone(),
                text: utt.text.clone(),
            }
        })
        .collect();
    serialize_sdr_items(&items, resolution)
}

/// Serializes one labeled segment as a GLSC target.
pub fn serialize_glsc(segment: &SegmentRecord, label: &GlscLabel) -> String {
    format!("{GLSC_TASK_TOKEN}<|spk:{}|>{}", escape(&label.composite()), escape(&segment.ref_text))
}

/// Serializes an in-memory sequence (times taken as already relative).
pub fn serialize(sequence: &SotSequence, resolution: f64) -> Result<String, SotError> {
    match sequence {
        SotSequence::Sdr(items) => serialize_sdr_items(items, resolution),
        SotSequence::Glsc { label, text } => {
            Ok(format!("{GLSC_TASK_TOKEN}<|spk:{}|>{}", escape(label), escape(text)))
        }
    }
}

/// Strict parse: the inverse of [`serialize`] on well-formed sequences,
/// rejecting the first malformed construct with its byte offset.
pub fn parse_strict(input: &str) -> Result<SotSequence, SotError> {
    let parsed = parse_lenient(input);
    if let Some(first) = parsed.diagnostics.first() {
        return Err(SotError::Malformed { offset: first.offset, message: first.message.clone() });
    }
    Ok(parsed.sequence)
}

/// Lenient parse: never fails on any input. Malformed tags are skipped,
/// missing structure is repaired (e.g. a lone timestamp gets `end = start`),
/// and every repair is recorded. Unknown text between structural slots is
/// dropped rather than guessed at.
pub fn parse_lenient(input: &str) -> LenientParse {
    Parser::new(input).run()
}

/// Decodes the `\uXXXX` escape starting at byte `i` (which holds `\`), or
/// `None` when the following bytes do not form one.
fn decode_escape(s: &str, i: usize) -> Option<char> {
    if s.as_bytes().get(i + 1) != Some(&b'u') {
        return None;
    }
    s.get(i + 2..i + 6)
        .and_then(|hex| u32::from_str_radix(hex, 16).ok())
        .and_then(char::from_u32)
}

enum Event {
    Task(bool), // true = SDR
    Ts(f64),
    Spk(String),
    Text(String),
}

struct Parser<'a> {
    input: &'a str,
    diagnostics: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        Parser { input, diagnostics: Vec::new() }
    }

    fn diag(&mut self, offset: usize, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic { offset, message: message.into() });
    }

    /// Decodes `\uXXXX` escapes; invalid escapes survive literally with a
    /// diagnostic.
    fn unescape(&mut self, raw: &str, base_offset: usize) -> String {
        let mut out = String::with_capacity(raw.len());
        let mut i = 0;
        while i < raw.len() {
            let c = raw[i..].chars().next().unwrap();
            if c != '\\' {
                out.push(c);
                i += c.len_utf8();
                continue;
            }
            match decode_escape(raw, i) {
                Some(ch) => {
                    out.push(ch);
                    i += 6;
                }
                None => {
                    self.diag(base_offset + i, "invalid escape sequence");
                    out.push('\\');
                    i += 1;
                }
            }
        }
        out
    }

    /// Tokenizes the input into tag/text events, attaching byte offsets.
    fn events(&mut self) -> Vec<(usize, Event)> {
        let mut events = Vec::new();
        let mut text = String::new();
        let mut text_start = 0usize;
        let mut i = 0usize;
        let input = self.input;
        let flush =
            |events: &mut Vec<(usize, Event)>, text: &mut String, text_start: usize| {
                if !text.is_empty() {
                    events.push((text_start, Event::Text(std::mem::take(text))));
                }
            };

        while i < input.len() {
            let rest = &input[i..];
            let c = rest.chars().next().unwrap();
            if rest.starts_with("<|") {
                match rest[2..].find("|>") {
                    Some(rel_end) => {
                        let content = &rest[2..2 + rel_end];
                        if content.contains("<|") {
                            // An opener inside the tag means this "tag" was
                            // never closed; skip to the inner opener.
                            self.diag(i, "unterminated tag");
                            flush(&mut events, &mut text, text_start);
                            i += 2 + content.find("<|").unwrap();
                            continue;
                        }
                        flush(&mut events, &mut text, text_start);
                        match self.tag_event(content, i) {
                            Some(event) => events.push((i, event)),
                            None => self.diag(i, format!("malformed tag <|{content}|>")),
                        }
                        i += 2 + rel_end + 2;
                    }
                    None => {
                        self.diag(i, "unterminated tag");
                        i += 2;
                    }
                }
                continue;
            }
            if c == '<' || c == '|' {
                self.diag(i, format!("unescaped {c:?} in free text"));
                if text.is_empty() {
                    text_start = i;
                }
                text.push(c);
                i += 1;
                continue;
            }
            if c == '\\' {
                if text.is_empty() {
                    text_start = i;
                }
                match decode_escape(input, i) {
                    Some(ch) => {
                        text.push(ch);
                        i += 6;
                    }
                    None => {
                        self.diag(i, "invalid escape sequence");
                        text.push('\\');
                        i += 1;
                    }
                }
                continue;
            }
            if text.is_empty() {
                text_start = i;
            }
            text.push(c);
            i += c.len_utf8();
        }
        flush(&mut events, &mut text, text_start);
        events
    }

    fn tag_event(&mut self, content: &str, offset: usize) -> Option<Event> {
        if content == "SDR" {
            return Some(Event::Task(true));
        }
        if content == "GLSC" {
            return Some(Event::Task(false));
        }
        if let Some(raw) = content.strip_prefix("ts:") {
            let value: f64 = raw.parse().ok()?;
            if !value.is_finite() || value < 0.0 {
                return None;
            }
            return Some(Event::Ts(value));
        }
        if let Some(raw) = content.strip_prefix("spk:") {
            return Some(Event::Spk(self.unescape(raw, offset + 6)));
        }
        None
    }

    fn run(mut self) -> LenientParse {
        let events = self.events();
        let mut iter = events.into_iter().peekable();

        let is_sdr = match iter.peek() {
            Some((_, Event::Task(sdr))) => {
                let sdr = *sdr;
                iter.next();
                sdr
            }
            _ => {
                self.diag(0, "missing task token; assuming SDR");
                true
            }
        };

        let sequence = if is_sdr {
            SotSequence::Sdr(self.run_sdr(iter))
        } else {
            self.run_glsc(iter)
        };
        LenientParse { sequence, diagnostics: self.diagnostics }
    }

    fn run_sdr(&mut self, events: impl Iterator<Item = (usize, Event)>) -> Vec<SdrItem> {
        enum State {
            ExpectStart,
            ExpectEnd { start: f64 },
            ExpectSpeaker { start: f64, end: f64 },
            InText { item: SdrItem },
        }

        let mut items = Vec::new();
        let mut state = State::ExpectStart;
        let mut last_end = 0.0f64;

        for (offset, event) in events {
            state = match (state, event) {
                (State::ExpectStart, Event::Ts(t)) => State::ExpectEnd { start: t },
                (State::ExpectStart, Event::Spk(label)) => {
                    self.diag(offset, "speaker tag without timestamps");
                    State::InText {
                        item: SdrItem {
                            start: last_end,
                            end: last_end,
                            speaker_label: label,
                            text: String::new(),
                        },
                    }
                }
                (State::ExpectStart, Event::Text(_)) => {
                    self.diag(offset, "text outside any utterance; dropped");
                    State::ExpectStart
                }
                (State::ExpectEnd { start }, Event::Ts(t)) => {
                    State::ExpectSpeaker { start, end: t }
                }
                (State::ExpectEnd { start }, Event::Spk(label)) => {
                    self.diag(offset, "missing end timestamp; using start");
                    State::InText {
                        item: SdrItem {
                            start,
                            end: start,
                            speaker_label: label,
                            text: String::new(),
                        },
                    }
                }
                (State::ExpectEnd { start }, Event::Text(_)) => {
                    self.diag(offset, "text before speaker tag; dropped");
                    State::ExpectEnd { start }
                }
                (State::ExpectSpeaker { start, end }, Event::Spk(label)) => State::InText {
                    item: SdrItem { start, end, speaker_label: label, text: String::new() },
                },
                (State::ExpectSpeaker { .. }, Event::Ts(t)) => {
                    self.diag(offset, "timestamps without a speaker tag; dropped");
                    State::ExpectEnd { start: t }
                }
                (State::ExpectSpeaker { start, end }, Event::Text(_)) => {
                    self.diag(offset, "text before speaker tag; dropped");
                    State::ExpectSpeaker { start, end }
                }
                (State::InText { mut item }, Event::Text(t)) => {
                    item.text.push_str(&t);
                    State::InText { item }
                }
                (State::InText { item }, Event::Ts(t)) => {
                    last_end = item.end;
                    items.push(item);
                    State::ExpectEnd { start: t }
                }
                (State::InText { item }, Event::Spk(label)) => {
                    self.diag(offset, "speaker tag without timestamps");
                    last_end = item.end;
                    let anchor = item.end;
                    items.push(item);
                    State::InText {
                        item: SdrItem {
                            start: anchor,
                            end: anchor,
                            speaker_label: label,
                            text: String::new(),
                        },
                    }
                }
                (state, Event::Task(_)) => {
                    self.diag(offset, "task token not at sequence start; ignored");
                    state
                }
            };
        }

        match state {
            State::InText { item } => items.push(item),
            State::ExpectStart => {}
            State::ExpectEnd { .. } | State::ExpectSpeaker { .. } => {
                self.diag(self.input.len(), "dangling timestamps at end of sequence; dropped");
            }
        }
        items
    }

    fn run_glsc(&mut self, events: impl Iterator<Item = (usize, Event)>) -> SotSequence {
        let mut label: Option<String> = None;
        let mut text = String::new();
        for (offset, event) in events {
            match event {
                Event::Spk(l) => {
                    if label.is_none() {
                        label = Some(l);
                    } else {
                        self.diag(offset, "extra speaker tag in GLSC sequence; ignored");
                    }
                }
                Event::Text(t) => {
                    if label.is_none() {
                        self.diag(offset, "text before the GLSC label; dropped");
                    } else {
                        text.push_str(&t);
                    }
                }
                Event::Ts(_) => {
                    self.diag(offset, "timestamp tag in GLSC sequence; ignored");
                }
                Event::Task(_) => {
                    self.diag(offset, "task token not at sequence start; ignored");
                }
            }
        }
        if label.is_none() {
            self.diag(self.input.len(), "GLSC sequence without a speaker label");
        }
        SotSequence::Glsc { label: label.unwrap_or_default(), text }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::Utterance;
    use proptest::prelude::*;

    fn group(utts: Vec<(f64, f64, &str, &str)>) -> TurnGroup {
        let start = utts.iter().map(|u| u.0).fold(f64::INFINITY, f64::min);
        let end = utts.iter().map(|u| u.1).fold(0.0, f64::max);
        TurnGroup {
            session_id: "s".into(),
            utterances: utts
                .into_iter()
                .map(|(s, e, spk, text)| Utterance {
                    session_id: "s".into(),
                    speaker_id: spk.into(),
                    start: s,
                    end: e,
                    text: text.into(),
                })
                .collect(),
            start,
            end,
        }
    }

    #[test]
    fn serialize_sdr_quantizes_and_orders() {
        let g = group(vec![(0.0, 1.23, "A", "hi")]);
        assert_eq!(serialize_sdr(&g, 0.1).unwrap(), "<|SDR|><|ts:0.0|><|ts:1.2|><|spk:A|>hi");

        // Input order does not matter; start order does.
        let g = group(vec![(2.0, 3.0, "B", "later"), (0.5, 1.5, "A", "first")]);
        let s = serialize_sdr(&g, 0.1).unwrap();
        assert_eq!(s, "<|SDR|><|ts:0.0|><|ts:1.0|><|spk:A|>first<|ts:1.5|><|ts:2.5|><|spk:B|>later");
    }

    #[test]
    fn serialize_glsc_example() {
        let segment = SegmentRecord {
            segment_id: "x".into(),
            session_id: "s".into(),
            speaker_id: "spk".into(),
            start: 0.0,
            end: 1.0,
            ref_text: "hello".into(),
            hyp_text: None,
        };
        let label = GlscLabel { global_id: 0, local_id: 0 };
        assert_eq!(serialize_glsc(&segment, &label), "<|GLSC|><|spk:G0-L0|>hello");
    }

    #[test]
    fn escaping_makes_specials_unambiguous() {
        let segment = SegmentRecord {
            segment_id: "x".into(),
            session_id: "s".into(),
            speaker_id: "spk".into(),
            start: 0.0,
            end: 1.0,
            ref_text: "a < b | c \\ d".into(),
            hyp_text: None,
        };
        let label = GlscLabel { global_id: 1, local_id: 2 };
        let s = serialize_glsc(&segment, &label);
        assert_eq!(s, "<|GLSC|><|spk:G1-L2|>a \\u003c b \\u007c c \\u005c d");
        let parsed = parse_strict(&s).unwrap();
        assert_eq!(
            parsed,
            SotSequence::Glsc { label: "G1-L2".into(), text: "a < b | c \\ d".into() }
        );
    }

    #[test]
    fn strict_parse_round_trips_wellformed_sdr() {
        let g = group(vec![(0.0, 1.2, "G0-L1", "hello there"), (1.2, 2.0, "G2-L0", "ok")]);
        let s = serialize_sdr(&g, 0.1).unwrap();
        let parsed = parse_strict(&s).unwrap();
        let SotSequence::Sdr(items) = &parsed else { panic!("expected SDR") };
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].speaker_label, "G0-L1");
        assert_eq!(items[0].text, "hello there");
        assert_eq!(items[1].start, 1.2);
        // Re-serialization is byte-identical.
        assert_eq!(serialize(&parsed, 0.1).unwrap(), s);
    }

    #[test]
    fn lenient_repairs_missing_end_timestamp() {
        let input = "<|SDR|><|ts:0.0|>missing-second-ts<|spk:A|>x";
        let parsed = parse_lenient(input);
        let SotSequence::Sdr(items) = &parsed.sequence else { panic!() };
        assert_eq!(items.len(), 1);
        assert_eq!(items[0].start, 0.0);
        assert_eq!(items[0].end, 0.0);
        assert_eq!(items[0].speaker_label, "A");
        assert_eq!(items[0].text, "x");
        assert!(!parsed.diagnostics.is_empty());
    }

    #[test]
    fn strict_rejects_with_byte_offset() {
        let input = "<|SDR|><|ts:0.0|>missing-second-ts<|spk:A|>x";
        let err = parse_strict(input).unwrap_err();
        let SotError::Malformed { offset, .. } = err else { panic!() };
        assert_eq!(offset, input.find("missing").unwrap());
    }

    #[test]
    fn strict_rejects_raw_specials_and_bad_tags() {
        assert!(parse_strict("<|SDR|><|ts:0.0|><|ts:1.0|><|spk:A|>a < b").is_err());
        assert!(parse_strict("<|SDR|><|bogus|>").is_err());
        assert!(parse_strict("<|SDR|><|ts:abc|>").is_err());
        assert!(parse_strict("<|SDR|><|ts:-1.0|>").is_err());
        assert!(parse_strict("no task token").is_err());
        assert!(parse_strict("").is_err());
    }

    #[test]
    fn lenient_handles_garbage() {
        for input in [
            "",
            "<|",
            "<|SDR|><|ts:",
            "<|GLSC|>text only",
            "|||<<<",
            "<|SDR|><|ts:0.0|><|ts:1.0|>",
            "<|GLSC|><|spk:A|><|spk:B|>x<|ts:1.0|>",
            "\\u00zz",
        ] {
            let parsed = parse_lenient(input);
            assert!(!parsed.diagnostics.is_empty(), "{input:?} should produce diagnostics");
        }
        // A GLSC sequence missing its label comes back scoreable but flagged.
        let parsed = parse_lenient("<|GLSC|>text only");
        assert_eq!(
            parsed.sequence,
            SotSequence::Glsc { label: String::new(), text: String::new() }
        );
    }

    #[test]
    fn resolution_variants_render_fixed_decimals() {
        let g = group(vec![(0.0, 2.0, "A", "x")]);
        assert_eq!(serialize_sdr(&g, 1.0).unwrap(), "<|SDR|><|ts:0|><|ts:2|><|spk:A|>x");
        assert_eq!(serialize_sdr(&g, 0.25).unwrap(), "<|SDR|><|ts:0.00|><|ts:2.00|><|spk:A|>x");
        assert!(matches!(
            serialize_sdr(&g, 0.0),
            Err(SotError::UnsupportedResolution(_))
        ));
    }

    #[test]
    fn negative_relative_time_rejected() {
        let mut g = group(vec![(1.0, 2.0, "A", "x")]);
        g.start = 3.0; // group start after the utterance
        let err = serialize_sdr(&g, 0.1).unwrap_err();
        assert!(matches!(err, SotError::NegativeRelativeTime { .. }));
    }

    fn arb_text() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                8 => proptest::char::range('a', 'z').prop_map(|c| c.to_string()),
                1 => Just(" ".to_string()),
                1 => prop_oneof![
                    Just("<".to_string()),
                    Just("|".to_string()),
                    Just("\\".to_string()),
                    Just("好".to_string())
                ],
            ],
            0..12,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn serialize_then_strict_parse_is_identity(
            utts in proptest::collection::vec(
                (0u32..300, 1u32..50, arb_text(), arb_text()),
                1..6,
            ),
        ) {
            // Times on the 0.1 s grid, so quantization is the identity.
            let mut t = 0u32;
            let items: Vec<SdrItem> = utts
                .into_iter()
                .map(|(gap, dur, spk, text)| {
                    let start = t + gap;
                    t = start + dur;
                    SdrItem {
                        start: start as f64 / 10.0,
                        end: t as f64 / 10.0,
                        speaker_label: if spk.is_empty() { "s".to_string() } else { spk },
                        text,
                    }
                })
                .collect();
            let serialized = serialize_sdr_items(&items, 0.1).unwrap();
            let parsed = parse_strict(&serialized).unwrap();
            let SotSequence::Sdr(got) = &parsed else { panic!() };
            prop_assert_eq!(got.len(), items.len());
            for (a, b) in got.iter().zip(&items) {
                prop_assert!((a.start - b.start).abs() < 1e-9);
                prop_assert!((a.end - b.end).abs() < 1e-9);
                prop_assert_eq!(&a.speaker_label, &b.speaker_label);
                prop_assert_eq!(&a.text, &b.text);
            }
            prop_assert_eq!(serialize(&parsed, 0.1).unwrap(), serialized);
        }

        #[test]
        fn lenient_parse_never_panics(input in "\\PC{0,200}") {
            let _ = parse_lenient(&input);
        }

        #[test]
        fn lenient_parse_survives_tag_like_noise(
            parts in proptest::collection::vec(
                prop_oneof![
                    Just("<|SDR|>".to_string()),
                    Just("<|GLSC|>".to_string()),
                    Just("<|ts:1.0|>".to_string()),
                    Just("<|ts:|>".to_string()),
                    Just("<|spk:A|>".to_string()),
                    Just("<|".to_string()),
                    Just("|>".to_string()),
                    Just("\\u003c".to_string()),
                    Just("\\u".to_string()),
                    Just("plain text".to_string()),
                ],
                0..12,
            ),
        ) {
            let input = parts.concat();
            let _ = parse_lenient(&input);
        }
    }
}
