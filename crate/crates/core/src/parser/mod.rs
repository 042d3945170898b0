//! Parsing of raw model output into the `<think>…</think><answer>…</answer>`
//! protocol, plus extraction of task payloads and prompt routing.
//!
//! The format predicate is strict: exactly one think block followed by exactly
//! one answer block, with nothing but whitespace around them. When the
//! predicate fails the answer falls back to the whole text with the protocol
//! tags removed, so task scoring can still attempt extraction.

mod boxes;
mod options;

pub use boxes::parse_boxes;
pub use options::{extract_option, AnswerOption, OptionSet};

use serde::{Deserialize, Serialize};

use crate::task::TaskKind;

pub const THINK_OPEN: &str = "<think>";
pub const THINK_CLOSE: &str = "</think>";
pub const ANSWER_OPEN: &str = "<answer>";
pub const ANSWER_CLOSE: &str = "</answer>";

const TAGS: [&str; 4] = [THINK_OPEN, THINK_CLOSE, ANSWER_OPEN, ANSWER_CLOSE];

/// Think/answer decomposition of one response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub think: Option<String>,
    pub answer: Option<String>,
    pub format_ok: bool,
}

impl ParsedResponse {
    /// Answer text, or the empty string when nothing could be recovered.
    pub fn answer_text(&self) -> &str {
        self.answer.as_deref().unwrap_or("")
    }

    /// Re-serialise a well-formed response into the canonical template.
    pub fn to_template(&self) -> Option<String> {
        match (&self.think, &self.answer, self.format_ok) {
            (Some(t), Some(a), true) => Some(format!("{THINK_OPEN}{t}{THINK_CLOSE}{ANSWER_OPEN}{a}{ANSWER_CLOSE}")),
            _ => None,
        }
    }
}

/// Split a raw response into its think and answer parts. Total.
pub fn parse_response(raw: &str) -> ParsedResponse {
    if let Some((think, answer)) = strict_blocks(raw) {
        return ParsedResponse {
            think: Some(think.trim().to_string()),
            answer: Some(answer.trim().to_string()),
            format_ok: true,
        };
    }

    let think = first_block(raw, THINK_OPEN, THINK_CLOSE).map(|t| t.trim().to_string());
    let stripped = strip_tags(raw);
    ParsedResponse { think, answer: if stripped.is_empty() { None } else { Some(stripped) }, format_ok: false }
}

fn strict_blocks(raw: &str) -> Option<(&str, &str)> {
    if TAGS.iter().any(|tag| raw.matches(tag).count() != 1) {
        return None;
    }
    let think_open = raw.find(THINK_OPEN)?;
    let think_close = raw.find(THINK_CLOSE)?;
    let answer_open = raw.find(ANSWER_OPEN)?;
    let answer_close = raw.find(ANSWER_CLOSE)?;
    if !(think_open < think_close && think_close < answer_open && answer_open < answer_close) {
        return None;
    }
    let outside = [
        &raw[..think_open],
        &raw[think_close + THINK_CLOSE.len()..answer_open],
        &raw[answer_close + ANSWER_CLOSE.len()..],
    ];
    if outside.iter().any(|s| !s.trim().is_empty()) {
        return None;
    }
    Some((&raw[think_open + THINK_OPEN.len()..think_close], &raw[answer_open + ANSWER_OPEN.len()..answer_close]))
}

fn first_block<'a>(raw: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = raw.find(open)? + open.len();
    let len = raw[start..].find(close)?;
    Some(&raw[start..start + len])
}

fn strip_tags(raw: &str) -> String {
    let mut text = raw.to_string();
    for tag in TAGS {
        text = text.replace(tag, " ");
    }
    text.trim().to_string()
}

/// Route a user prompt to the task whose template it matches.
///
/// Classification, detection and segmentation are recognised by their
/// leading words; any other prompt is closed VQA when it embeds `(A)` and
/// `(B)` option markers in order, open VQA otherwise.
pub fn route_task(prompt: &str) -> TaskKind {
    let head = prompt.trim_start();
    if starts_with_ignore_case(head, "Classify this pathological image") {
        TaskKind::Classification
    } else if starts_with_word(head, "detect") {
        TaskKind::Detection
    } else if starts_with_word(head, "segment") {
        TaskKind::Segmentation
    } else if has_lettered_options(prompt) {
        TaskKind::VqaClosed
    } else {
        TaskKind::VqaOpen
    }
}

fn starts_with_ignore_case(text: &str, prefix: &str) -> bool {
    text.get(..prefix.len()).is_some_and(|head| head.eq_ignore_ascii_case(prefix))
}

fn starts_with_word(text: &str, word: &str) -> bool {
    starts_with_ignore_case(text, word) && !text[word.len()..].chars().next().is_some_and(|c| c.is_alphanumeric())
}

fn has_lettered_options(prompt: &str) -> bool {
    match (prompt.find("(A)"), prompt.find("(B)")) {
        (Some(a), Some(b)) => a < b,
        _ => false,
    }
}
