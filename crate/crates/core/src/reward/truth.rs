use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bbox::BoundingBox;
use crate::metrics::BinaryMask;
use crate::task::TaskKind;

/// Task-shaped ground truth.
///
/// Wire shapes: `{"label": "A"}`, `{"boxes": [[x1, y1, x2, y2], ...]}`,
/// `{"mask": {"size": [h, w], "rle": [...]}}`, `{"answer": "B"}`,
/// `{"reference": "text"}`.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    ClsLabel(char),
    DetBoxes(Vec<BoundingBox>),
    SegMask(BinaryMask),
    ClosedAnswer(String),
    OpenAnswer(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid ground truth: {0}")]
pub struct GroundTruthError(pub String);

impl GroundTruth {
    /// The task this ground-truth shape belongs to.
    pub fn task_kind(&self) -> TaskKind {
        match self {
            GroundTruth::ClsLabel(_) => TaskKind::Classification,
            GroundTruth::DetBoxes(_) => TaskKind::Detection,
            GroundTruth::SegMask(_) => TaskKind::Segmentation,
            GroundTruth::ClosedAnswer(_) => TaskKind::VqaClosed,
            GroundTruth::OpenAnswer(_) => TaskKind::VqaOpen,
        }
    }

    pub fn shape_name(&self) -> &'static str {
        match self {
            GroundTruth::ClsLabel(_) => "label",
            GroundTruth::DetBoxes(_) => "boxes",
            GroundTruth::SegMask(_) => "mask",
            GroundTruth::ClosedAnswer(_) => "answer",
            GroundTruth::OpenAnswer(_) => "reference",
        }
    }

    pub fn from_value(value: &Value) -> Result<Self, GroundTruthError> {
        let obj = value.as_object().ok_or_else(|| GroundTruthError("expected an object".into()))?;
        let key = single_key(obj)?;
        let field = &obj[key];
        match key {
            "label" => {
                let s = field.as_str().ok_or_else(|| GroundTruthError("`label` must be a string".into()))?;
                parse_label(s).map(GroundTruth::ClsLabel)
            }
            "boxes" => serde_json::from_value::<Vec<BoundingBox>>(field.clone())
                .map(GroundTruth::DetBoxes)
                .map_err(|e| GroundTruthError(format!("`boxes`: {e}"))),
            "mask" => serde_json::from_value::<BinaryMask>(field.clone())
                .map(GroundTruth::SegMask)
                .map_err(|e| GroundTruthError(format!("`mask`: {e}"))),
            "answer" => field
                .as_str()
                .map(|s| GroundTruth::ClosedAnswer(s.to_string()))
                .ok_or_else(|| GroundTruthError("`answer` must be a string".into())),
            "reference" => field
                .as_str()
                .map(|s| GroundTruth::OpenAnswer(s.to_string()))
                .ok_or_else(|| GroundTruthError("`reference` must be a string".into())),
            other => Err(GroundTruthError(format!("unknown ground-truth field `{other}`"))),
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            GroundTruth::ClsLabel(c) => json!({ "label": c.to_string() }),
            GroundTruth::DetBoxes(b) => json!({ "boxes": b }),
            GroundTruth::SegMask(m) => json!({ "mask": m }),
            GroundTruth::ClosedAnswer(a) => json!({ "answer": a }),
            GroundTruth::OpenAnswer(r) => json!({ "reference": r }),
        }
    }
}

fn single_key(obj: &Map<String, Value>) -> Result<&str, GroundTruthError> {
    let mut keys = obj.keys();
    match (keys.next(), keys.next()) {
        (Some(k), None) => Ok(k.as_str()),
        (None, _) => Err(GroundTruthError("empty object".into())),
        _ => Err(GroundTruthError(format!(
            "expected exactly one field, got {}",
            obj.keys().map(String::as_str).collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn parse_label(s: &str) -> Result<char, GroundTruthError> {
    let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
    let mut chars = trimmed.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => Ok(c.to_ascii_uppercase()),
        _ => Err(GroundTruthError(format!("label `{s}` is not a single option letter"))),
    }
}

impl Serialize for GroundTruth {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GroundTruth {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        GroundTruth::from_value(&value).map_err(serde::de::Error::custom)
    }
}
