//! Turning raw model text into a score, explanation and binary label.
//!
//! Models are asked for `{"score": <0-100>, "explanation": "..."}`. Output is
//! often wrapped in prose, uses single quotes, or contains several attempts;
//! the last complete object wins. Nothing in here panics or errors: every
//! failure is recorded as a [`FaultReason`].

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::corpus::VerdictLabel;

pub const SCORE_KEY: &str = "score";
pub const EXPLANATION_KEY: &str = "explanation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultReason {
    /// No parseable JSON object in the response.
    NoJson,
    /// JSON found, but no object carries a usable score.
    BadSchema,
    /// Score outside 0..=100.
    OutOfRange,
    /// Blank response.
    Empty,
    /// Agent broke the one-action protocol (second action, or an action when
    /// no tool was offered).
    ProtocolViolation,
    /// The endpoint call itself failed after retries.
    GenerationFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictResponse {
    pub raw_text: String,
    pub score: Option<i64>,
    pub explanation: Option<String>,
    pub label: Option<VerdictLabel>,
    pub fault_reason: Option<FaultReason>,
}

impl VerdictResponse {
    pub fn fault(raw_text: impl Into<String>, reason: FaultReason) -> Self {
        Self {
            raw_text: raw_text.into(),
            score: None,
            explanation: None,
            label: None,
            fault_reason: Some(reason),
        }
    }

    pub fn from_score(raw_text: impl Into<String>, score: i64, explanation: Option<String>) -> Self {
        let label = score_to_label(score);
        Self {
            raw_text: raw_text.into(),
            score: Some(score),
            explanation,
            label,
            fault_reason: label.is_none().then_some(FaultReason::OutOfRange),
        }
    }

    pub fn is_fault(&self) -> bool {
        self.label.is_none()
    }
}

/// `0..=50` is False, `51..=100` is True, anything else has no label.
pub fn score_to_label(score: i64) -> Option<VerdictLabel> {
    match score {
        0..=50 => Some(VerdictLabel::False),
        51..=100 => Some(VerdictLabel::True),
        _ => None,
    }
}

static OPENING_QUOTE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"([{\[,:]\s*)'"#).expect("valid regex"));
static CLOSING_QUOTE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"'(\s*[:,}\]])"#).expect("valid regex"));

/// Rewrites single quotes used as JSON string delimiters into double quotes.
///
/// A quote counts as a delimiter when it follows `{ [ , :` or precedes
/// `: , } ]` (ignoring whitespace). Apostrophes between word characters are
/// left alone. The rewrite preserves byte offsets.
pub fn normalize_quotes(raw: &str) -> String {
    let opened = OPENING_QUOTE.replace_all(raw, "$1\"");
    CLOSING_QUOTE.replace_all(&opened, "\"$1").into_owned()
}

/// A JSON object found in free text, with its byte span.
#[derive(Debug, Clone, PartialEq)]
pub struct FoundObject {
    pub start: usize,
    pub end: usize,
    pub object: Map<String, Value>,
}

/// All complete JSON objects in `raw`, ordered by where they end.
///
/// Objects are searched for both in the raw text and in its quote-normalized
/// form; a span that parses either way counts once.
pub fn json_objects(raw: &str) -> Vec<FoundObject> {
    let normalized = normalize_quotes(raw);
    let mut found = scan_objects(raw);
    for candidate in scan_objects(&normalized) {
        if !found
            .iter()
            .any(|f| f.start == candidate.start && f.end == candidate.end)
        {
            found.push(candidate);
        }
    }
    found.sort_by_key(|f| (f.end, f.start));
    // Drop objects nested inside another found object.
    let spans: Vec<(usize, usize)> = found.iter().map(|f| (f.start, f.end)).collect();
    found.retain(|f| {
        !spans
            .iter()
            .any(|&(s, e)| (s, e) != (f.start, f.end) && s <= f.start && f.end <= e)
    });
    found
}

fn scan_objects(text: &str) -> Vec<FoundObject> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'{' {
            i += 1;
            continue;
        }
        if let Some(end) = matching_brace(bytes, i) {
            if let Ok(Value::Object(object)) = serde_json::from_str::<Value>(&text[i..=end]) {
                out.push(FoundObject {
                    start: i,
                    end,
                    object,
                });
                i = end + 1;
                continue;
            }
        }
        i += 1;
    }
    out
}

fn matching_brace(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + offset);
                }
            }
            _ => {}
        }
    }
    None
}

/// Case-insensitive key lookup.
pub(crate) fn field<'a>(object: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    object
        .get(key)
        .or_else(|| object.iter().find(|(k, _)| k.eq_ignore_ascii_case(key)).map(|(_, v)| v))
}

/// Integer scores pass through; numeric strings are parsed; reals are
/// truncated toward zero.
pub(crate) fn coerce_score(value: &Value) -> Option<i64> {
    let as_real = match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                return Some(i);
            }
            n.as_f64()?
        }
        Value::String(s) => {
            let s = s.trim();
            if let Ok(i) = s.parse::<i64>() {
                return Some(i);
            }
            s.parse::<f64>().ok()?
        }
        _ => return None,
    };
    as_real.is_finite().then(|| as_real.trunc() as i64)
}

pub(crate) fn explanation_of(object: &Map<String, Value>) -> Option<String> {
    match field(object, EXPLANATION_KEY)? {
        Value::String(s) => Some(s.clone()),
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

/// Extracts the verdict from a raw model response.
pub fn extract(raw: &str) -> VerdictResponse {
    if raw.trim().is_empty() {
        return VerdictResponse::fault(raw, FaultReason::Empty);
    }
    let objects = json_objects(raw);
    if objects.is_empty() {
        return VerdictResponse::fault(raw, FaultReason::NoJson);
    }
    let last_complete = objects.iter().rev().find_map(|found| {
        let score = coerce_score(field(&found.object, SCORE_KEY)?)?;
        Some((score, explanation_of(&found.object)))
    });
    match last_complete {
        Some((score, explanation)) => VerdictResponse::from_score(raw, score, explanation),
        None => VerdictResponse::fault(raw, FaultReason::BadSchema),
    }
}
