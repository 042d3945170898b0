use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::reward::{GroundTruth, ImageDims};
use crate::TaskKind;

/// One model response with its ground truth, as stored one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRecord {
    pub id: String,
    pub task: TaskKind,
    pub model: String,
    #[serde(default)]
    pub prompt: String,
    pub response: String,
    pub gt: GroundTruth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageDims>,
    /// Report grouping name; the task code when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
}

impl TaskRecord {
    pub fn task_name(&self) -> &str {
        self.dataset.as_deref().unwrap_or(self.task.code())
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.gt.task_kind() != self.task {
            return Err(format!("task `{}` does not take a `{}` ground truth", self.task, self.gt.shape_name()));
        }
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.model.is_empty() {
            return Err("empty model".into());
        }
        if let GroundTruth::SegMask(mask) = &self.gt {
            match self.image {
                None => return Err("segmentation records need `image`".into()),
                Some(dims) if dims.height != mask.height() || dims.width != mask.width() => {
                    return Err(format!(
                        "image {}x{} does not match mask {}x{}",
                        dims.height,
                        dims.width,
                        mask.height(),
                        mask.width()
                    ));
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub records: Vec<TaskRecord>,
    pub errors: Vec<LineError>,
}

pub fn ingest(path: impl AsRef<Path>) -> Result<IngestReport, EvalError> {
    let path = path.as_ref();
    let io_err = |source| EvalError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::open(path).map_err(io_err)?;
    ingest_reader(std::io::BufReader::new(file)).map_err(io_err)
}

pub fn ingest_str(text: &str) -> IngestReport {
    ingest_reader(text.as_bytes()).expect("reading from memory cannot fail")
}

/// Parse records line by line. Blank lines are ignored; a line that fails to
/// parse or validate, or repeats a `(model, id)` pair, becomes a [`LineError`].
pub fn ingest_reader<R: BufRead>(reader: R) -> std::io::Result<IngestReport> {
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let parsed =
            serde_json::from_str::<TaskRecord>(&line).map_err(|e| e.to_string()).and_then(|r| r.validate().map(|_| r));
        match parsed {
            Ok(r) => {
                if !seen.insert((r.model.clone(), r.id.clone())) {
                    report.errors.push(LineError {
                        line: lineno,
                        message: format!("duplicate id `{}` for model `{}`", r.id, r.model),
                    });
                } else {
                    report.records.push(r);
                }
            }
            Err(message) => report.errors.push(LineError { line: lineno, message }),
        }
    }
    if report.records.is_empty() && report.errors.is_empty() {
        log::warn!("no records in input");
    }
    for e in &report.errors {
        log::warn!("line {}: {}", e.line, e.message);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"id":"1","task":"cls","model":"m","prompt":"p","response":"<think>x</think><answer>B</answer>","gt":{"label":"B"}}
{"id":"2","task":"det","model":"m","prompt":"p","response":"[[1,1,5,5]]","gt":{"boxes":[[1,1,5,5]]}}
{"id":"3","task":"seg","model":"m","prompt":"p","response":"[[0,0,2,2]]","gt":{"mask":{"size":[4,4],"rle":[0,2,2,2,10]}},"image":{"h":4,"w":4}}
"#;

    #[test]
    fn three_good_lines() {
        let r = ingest_str(GOOD);
        assert_eq!(r.records.len(), 3, "{:?}", r.errors);
        assert!(r.errors.is_empty());
        assert_eq!(r.records[2].image, Some(ImageDims::new(4, 4)));
    }

    #[test]
    fn shape_mismatch_is_soft() {
        let text = format!(
            "{GOOD}{}\n",
            r#"{"id":"4","task":"det","model":"m","prompt":"p","response":"x","gt":{"label":"A"}}"#
        );
        let r = ingest_str(&text);
        assert_eq!(r.records.len(), 3);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].line, 4);
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        let text = format!("{GOOD}not json\n{}", GOOD.lines().next().unwrap());
        let r = ingest_str(&text);
        assert_eq!(r.records.len(), 3);
        let lines: Vec<usize> = r.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![4, 5]);
    }

    #[test]
    fn seg_needs_image() {
        let line =
            r#"{"id":"3","task":"seg","model":"m","prompt":"p","response":"","gt":{"mask":{"size":[4,4],"rle":[16]}}}"#;
        assert_eq!(ingest_str(line).errors.len(), 1);
    }

    #[test]
    fn empty_input() {
        let r = ingest_str("\n\n");
        assert!(r.records.is_empty() && r.errors.is_empty());
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(matches!(ingest("/definitely/not/here.jsonl"), Err(EvalError::Io { .. })));
    }
}
