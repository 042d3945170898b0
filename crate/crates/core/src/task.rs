use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The five task families a response can be scored under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "cls")]
    Classification,
    #[serde(rename = "det")]
    Detection,
    #[serde(rename = "seg")]
    Segmentation,
    #[serde(rename = "vqa_closed")]
    VqaClosed,
    #[serde(rename = "vqa_open")]
    VqaOpen,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] =
        [TaskKind::Classification, TaskKind::Detection, TaskKind::Segmentation, TaskKind::VqaClosed, TaskKind::VqaOpen];

    /// Wire code used in record files and requests.
    pub fn code(self) -> &'static str {
        match self {
            TaskKind::Classification => "cls",
            TaskKind::Detection => "det",
            TaskKind::Segmentation => "seg",
            TaskKind::VqaClosed => "vqa_closed",
            TaskKind::VqaOpen => "vqa_open",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task `{0}` (expected one of cls, det, seg, vqa_closed, vqa_open)")]
pub struct UnknownTask(pub String);

impl FromStr for TaskKind {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskKind::ALL.into_iter().find(|k| k.code() == s).ok_or_else(|| UnknownTask(s.to_string()))
    }
}
