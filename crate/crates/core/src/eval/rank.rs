use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::evaluate::{MetricName, TaskReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieMode {
    /// 1, 2, 2, 4
    #[default]
    Competition,
    /// 1, 2, 2, 3
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRanks {
    pub task: String,
    pub ranks: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub tie_mode: TieMode,
    pub tasks: Vec<TaskRanks>,
    /// Tasks left out because some model had no (finite) value.
    pub skipped_tasks: Vec<String>,
    /// `(model, mean rank over ranked tasks)`, best first; ties by name.
    pub average: Vec<(String, f64)>,
}

/// Rank models within each task (higher value is better) and average the
/// ranks over tasks. `values[task][model]`.
pub fn rank_models(values: &BTreeMap<String, BTreeMap<String, f64>>, mode: TieMode) -> RankTable {
    let models: BTreeSet<&String> = values.values().flat_map(|m| m.keys()).collect();
    let mut tasks = Vec::new();
    let mut skipped_tasks = Vec::new();
    for (task, per_model) in values {
        let complete = models.iter().all(|m| per_model.get(*m).is_some_and(|v| !v.is_nan()));
        if !complete {
            log::warn!("task `{task}` is missing a value for some model; not ranked");
            skipped_tasks.push(task.clone());
            continue;
        }
        let distinct: Vec<f64> = {
            let mut d: Vec<f64> = per_model.values().copied().collect();
            d.sort_by(|a, b| b.total_cmp(a));
            d.dedup();
            d
        };
        let ranks = per_model
            .iter()
            .map(|(m, &v)| {
                let rank = match mode {
                    TieMode::Competition => 1 + per_model.values().filter(|&&o| o > v).count(),
                    TieMode::Dense => 1 + distinct.iter().filter(|&&o| o > v).count(),
                };
                (m.clone(), rank as u32)
            })
            .collect();
        tasks.push(TaskRanks { task: task.clone(), ranks });
    }

    let mut average: Vec<(String, f64)> = models
        .iter()
        .filter(|_| !tasks.is_empty())
        .map(|m| {
            let sum: f64 = tasks.iter().map(|t| f64::from(t.ranks[*m])).sum();
            ((*m).clone(), sum / tasks.len() as f64)
        })
        .collect();
    average.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    RankTable { tie_mode: mode, tasks, skipped_tasks, average }
}

/// Rank from evaluation reports, using each task's primary metric unless
/// `metric` overrides it (tasks without that metric are then ignored).
pub fn rank_reports(reports: &[TaskReport], metric: Option<MetricName>, mode: TieMode) -> RankTable {
    let mut values: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for r in reports {
        let wanted = metric.unwrap_or(MetricName::primary(r.task_kind));
        if r.metric == wanted {
            values.entry(r.task.clone()).or_default().insert(r.model.clone(), r.value);
        }
    }
    rank_models(&values, mode)
}

impl RankTable {
    pub fn render(&self) -> String {
        let mut s = String::from("model\tavg_rank");
        for t in &self.tasks {
            s.push('\t');
            s.push_str(&t.task);
        }
        s.push('\n');
        for (model, avg) in &self.average {
            s.push_str(&format!("{model}\t{avg:.3}"));
            for t in &self.tasks {
                s.push_str(&format!("\t{}", t.ranks[model]));
            }
            s.push('\n');
        }
        s
    }
}
