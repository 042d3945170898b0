use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{percentile_ci, substream_rng};
use super::records::TaskRecord;
use super::EvalError;
use crate::metrics::{average_precision_from_flags, f1_multiclass, match_predictions, F1Averaging};
use crate::parser::{parse_boxes, parse_response, OptionSet};
use crate::reward::{Extraction, GroundTruth, RewardConfig, Scorer, TaskContext};
use crate::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricName {
    #[serde(rename = "ACC")]
    Acc,
    F1,
    AP30,
    AP50,
    AP70,
    Dice,
    BLEU4,
}

const AP_THRESHOLDS: [(MetricName, f64); 3] =
    [(MetricName::AP30, 0.3), (MetricName::AP50, 0.5), (MetricName::AP70, 0.7)];

impl MetricName {
    pub const ALL: [MetricName; 7] = [
        MetricName::Acc,
        MetricName::F1,
        MetricName::AP30,
        MetricName::AP50,
        MetricName::AP70,
        MetricName::Dice,
        MetricName::BLEU4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Acc => "ACC",
            MetricName::F1 => "F1",
            MetricName::AP30 => "AP30",
            MetricName::AP50 => "AP50",
            MetricName::AP70 => "AP70",
            MetricName::Dice => "Dice",
            MetricName::BLEU4 => "BLEU4",
        }
    }

    /// Metrics reported for a task, in report order.
    pub fn for_task(task: TaskKind) -> &'static [MetricName] {
        match task {
            TaskKind::Classification => &[MetricName::Acc, MetricName::F1],
            TaskKind::Detection => &[MetricName::AP30, MetricName::AP50, MetricName::AP70],
            TaskKind::Segmentation => &[MetricName::Dice],
            TaskKind::VqaClosed => &[MetricName::Acc],
            TaskKind::VqaOpen => &[MetricName::BLEU4],
        }
    }

    /// The metric used for ranking a task by default.
    pub fn primary(task: TaskKind) -> MetricName {
        match task {
            TaskKind::Detection => MetricName::AP50,
            other => MetricName::for_task(other)[0],
        }
    }
}

impl std::fmt::Display for MetricName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricName::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Bootstrap resamples per group.
    pub bootstrap: usize,
    pub seed: u64,
    pub confidence: f64,
    /// Restrict reports to these metrics; every applicable metric when `None`.
    pub metrics: Option<Vec<MetricName>>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { bootstrap: 1000, seed: 42, confidence: 0.95, metrics: None }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.bootstrap == 0 {
            return Err(EvalError::InvalidConfig("bootstrap must be >= 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(EvalError::InvalidConfig(format!("confidence must be in (0, 1), got {}", self.confidence)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub task_kind: TaskKind,
    pub model: String,
    pub metric: MetricName,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// What one record contributes to its group's metrics.
#[derive(Debug, Clone)]
pub(crate) enum Outcome {
    Label {
        truth: char,
        pred: Option<char>,
    },
    /// Match flags at each AP threshold, in emission order.
    Boxes {
        flags: [Vec<bool>; 3],
        num_gts: usize,
    },
    /// Per-record value averaged over the group (Dice, closed-VQA hit, BLEU-4).
    Scalar(f64),
}

pub(crate) fn default_scorer() -> Scorer {
    Scorer::new(RewardConfig::default()).expect("default reward config is valid")
}

pub(crate) fn record_context(r: &TaskRecord) -> TaskContext {
    TaskContext { options: Some(OptionSet::from_prompt(&r.prompt)), image: r.image }
}

fn outcome(scorer: &Scorer, r: &TaskRecord) -> Result<Outcome, EvalError> {
    if let GroundTruth::DetBoxes(gts) = &r.gt {
        let parsed = parse_response(&r.response);
        let preds = parse_boxes(parsed.answer_text());
        let flags = AP_THRESHOLDS.map(|(_, t)| match_predictions(&preds, gts, t));
        return Ok(Outcome::Boxes { flags, num_gts: gts.len() });
    }
    let scored = scorer.score_detailed(r.task, &r.response, &r.gt, &record_context(r))?;
    Ok(match (&r.gt, scored.extracted) {
        (GroundTruth::ClsLabel(truth), Extraction::Label(pred)) => Outcome::Label { truth: *truth, pred },
        _ => Outcome::Scalar(scored.breakdown.r_task),
    })
}

/// Group statistic over the records at `idx` (with repetition).
fn statistic(metric: MetricName, outcomes: &[Outcome], idx: &[usize]) -> Option<f64> {
    match metric {
        MetricName::Acc | MetricName::F1 => {
            if let Some(Outcome::Scalar(_)) = outcomes.first() {
                if metric == MetricName::Acc {
                    return Some(mean_scalar(outcomes, idx));
                }
                return None;
            }
            let mut truth = Vec::with_capacity(idx.len());
            let mut pred = Vec::with_capacity(idx.len());
            for &i in idx {
                if let Outcome::Label { truth: t, pred: p } = outcomes[i] {
                    truth.push(t);
                    pred.push(p);
                }
            }
            if metric == MetricName::Acc {
                crate::metrics::accuracy(&truth, &pred).ok()
            } else {
                f1_multiclass(&truth, &pred, &[], F1Averaging::Macro).ok()
            }
        }
        MetricName::AP30 | MetricName::AP50 | MetricName::AP70 => {
            let k = AP_THRESHOLDS.iter().position(|(m, _)| *m == metric)?;
            // pool detections across images: rank-1 boxes of every image first,
            // then rank-2, ...; within a rank, sample order
            let mut pooled: Vec<(usize, usize, bool)> = Vec::new();
            let mut total_gts = 0;
            for (pos, &i) in idx.iter().enumerate() {
                if let Outcome::Boxes { flags, num_gts } = &outcomes[i] {
                    total_gts += num_gts;
                    pooled.extend(flags[k].iter().enumerate().map(|(rank, &hit)| (rank, pos, hit)));
                }
            }
            pooled.sort_unstable_by_key(|&(rank, pos, _)| (rank, pos));
            let flags: Vec<bool> = pooled.into_iter().map(|(_, _, hit)| hit).collect();
            Some(average_precision_from_flags(&flags, total_gts))
        }
        MetricName::Dice | MetricName::BLEU4 => Some(mean_scalar(outcomes, idx)),
    }
}

fn mean_scalar(outcomes: &[Outcome], idx: &[usize]) -> f64 {
    let sum: f64 = idx
        .iter()
        .map(|&i| match outcomes[i] {
            Outcome::Scalar(v) => v,
            _ => 0.0,
        })
        .sum();
    sum / idx.len() as f64
}

fn evaluate_group(
    task: &str,
    kind: TaskKind,
    model: &str,
    records: &[&TaskRecord],
    scorer: &Scorer,
    cfg: &EvalConfig,
) -> Result<Vec<TaskReport>, EvalError> {
    let metrics: Vec<MetricName> = MetricName::for_task(kind)
        .iter()
        .copied()
        .filter(|m| cfg.metrics.as_ref().is_none_or(|sel| sel.contains(m)))
        .collect();
    let n = records.len();
    if n == 0 || metrics.is_empty() {
        return Ok(Vec::new());
    }
    let outcomes = records.iter().map(|r| outcome(scorer, r)).collect::<Result<Vec<_>, _>>()?;

    let all: Vec<usize> = (0..n).collect();
    let points: Vec<Option<f64>> = metrics.iter().map(|&m| statistic(m, &outcomes, &all)).collect();

    let mut rng = substream_rng(cfg.seed, &format!("{task}\u{1f}{model}"));
    let mut boot: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.bootstrap); metrics.len()];
    let mut idx = vec![0usize; n];
    for _ in 0..cfg.bootstrap {
        idx.iter_mut().for_each(|i| *i = rng.gen_range(0..n));
        for (k, &m) in metrics.iter().enumerate() {
            if let Some(v) = statistic(m, &outcomes, &idx) {
                boot[k].push(v);
            }
        }
    }

    let mut out = Vec::with_capacity(metrics.len());
    for ((metric, point), mut stats) in metrics.into_iter().zip(points).zip(boot) {
        let Some(value) = point else { continue };
        let (ci_low, ci_high) =
            if stats.is_empty() { (value, value) } else { percentile_ci(&mut stats, cfg.confidence) };
        out.push(TaskReport {
            task: task.to_string(),
            task_kind: kind,
            model: model.to_string(),
            metric,
            value,
            ci_low,
            ci_high,
            n,
        });
    }
    Ok(out)
}

/// Reports for every `(task name, model)` group, ordered by task name, task
/// kind, model, then metric. Deterministic for a given seed regardless of
/// thread scheduling.
pub fn evaluate(records: &[TaskRecord], cfg: &EvalConfig) -> Result<Vec<TaskReport>, EvalError> {
    cfg.validate()?;
    let mut groups: BTreeMap<(&str, TaskKind, &str), Vec<&TaskRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.task_name(), r.task, r.model.as_str())).or_default().push(r);
    }
    let scorer = default_scorer();
    let results: Vec<Result<Vec<TaskReport>, EvalError>> = groups
        .par_iter()
        .map(|((task, kind, model), recs)| evaluate_group(task, *kind, model, recs, &scorer, cfg))
        .collect();
    let mut reports = Vec::new();
    for r in results {
        reports.extend(r?);
    }
    Ok(reports)
}

/// Fixed-width text table of reports.
pub fn render_table(reports: &[TaskReport], confidence: f64) -> String {
    let tw = reports.iter().map(|r| r.task.len()).max().unwrap_or(0).max(4);
    let mw = reports.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let ci_label = format!("{}% CI", (confidence * 100.0).round());
    let mut s = String::new();
    let _ =
        writeln!(s, "{:<tw$}  {:<mw$}  {:<6}  {:>7}  {:<17}  {:>6}", "task", "model", "metric", "value", ci_label, "n");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<tw$}  {:<mw$}  {:<6}  {:>7.4}  [{:.4}, {:.4}]  {:>6}",
            r.task, r.model, r.metric, r.value, r.ci_low, r.ci_high, r.n
        );
    }
    s
}
