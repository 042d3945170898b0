use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// `(TP + TN) / N`; errors when there are no samples.
    pub fn accuracy(&self) -> Result<f64, MetricError> {
        match self.total() {
            0 => Err(MetricError::Empty),
            n => Ok((self.tp + self.tn) as f64 / n as f64),
        }
    }

    /// `2TP / (2TP + FP + FN)`, 0.0 when all three are zero.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

/// Fraction of predictions equal to the truth. A `None` prediction (nothing
/// could be extracted) counts as incorrect.
pub fn accuracy<T: PartialEq>(truth: &[T], pred: &[Option<T>]) -> Result<f64, MetricError> {
    if truth.len() != pred.len() {
        return Err(MetricError::LengthMismatch(truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return Err(MetricError::Empty);
    }
    let correct = truth.iter().zip(pred).filter(|(t, p)| p.as_ref() == Some(*t)).count();
    Ok(correct as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Averaging {
    /// Unweighted mean of per-class one-vs-rest F1.
    #[default]
    Macro,
    /// Per-class F1 weighted by class support.
    Weighted,
}

/// Multi-class F1 over one-vs-rest confusion counts.
///
/// The class universe is `classes` plus every label seen in `truth` or
/// `pred`; a class with neither support nor predictions contributes 0.
pub fn f1_multiclass<T: Ord + Clone>(
    truth: &[T],
    pred: &[Option<T>],
    classes: &[T],
    averaging: F1Averaging,
) -> Result<f64, MetricError> {
    if truth.len() != pred.len() {
        return Err(MetricError::LengthMismatch(truth.len(), pred.len()));
    }
    if truth.is_empty() {
        return Err(MetricError::Empty);
    }
    let universe: BTreeSet<&T> = classes.iter().chain(truth.iter()).chain(pred.iter().flatten()).collect();

    let mut weighted_sum = 0.0;
    let mut weight_total = 0.0;
    for class in universe {
        let mut counts = ConfusionCounts::default();
        let mut support = 0u64;
        for (t, p) in truth.iter().zip(pred) {
            let is_true = t == class;
            let is_pred = p.as_ref() == Some(class);
            support += u64::from(is_true);
            match (is_true, is_pred) {
                (true, true) => counts.tp += 1,
                (true, false) => counts.fn_ += 1,
                (false, true) => counts.fp += 1,
                (false, false) => counts.tn += 1,
            }
        }
        let weight = match averaging {
            F1Averaging::Macro => 1.0,
            F1Averaging::Weighted => support as f64,
        };
        weighted_sum += weight * counts.f1();
        weight_total += weight;
    }
    Ok(if weight_total > 0.0 { weighted_sum / weight_total } else { 0.0 })
}
