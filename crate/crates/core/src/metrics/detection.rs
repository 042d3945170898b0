use serde::{Deserialize, Serialize};

use crate::bbox::BoundingBox;

/// Intersection over union of two boxes, in `[0, 1]`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Greedy one-to-one matching of ranked predictions against ground truth.
///
/// Each prediction, in list order, takes the unmatched ground-truth box with
/// the highest IoU and is a true positive when that IoU reaches `threshold`.
/// Equal IoUs are broken by box coordinates so the result does not depend on
/// the order of `gts`.
pub fn match_predictions(preds: &[BoundingBox], gts: &[BoundingBox], threshold: f64) -> Vec<bool> {
    let mut taken = vec![false; gts.len()];
    preds
        .iter()
        .map(|p| {
            let best = gts
                .iter()
                .enumerate()
                .filter(|(j, _)| !taken[*j])
                .map(|(j, g)| (j, iou(p, g)))
                .max_by(|(ja, a), (jb, b)| a.total_cmp(b).then_with(|| gts[*jb].coord_cmp(&gts[*ja])));
            match best {
                Some((j, v)) if v >= threshold => {
                    taken[j] = true;
                    true
                }
                _ => false,
            }
        })
        .collect()
}

/// Precision/recall after each prefix of a ranked prediction list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    /// `(recall, precision)` after ranks `1..=n`.
    pub points: Vec<(f64, f64)>,
}

impl PrCurve {
    pub fn from_flags(flags: &[bool], num_gts: usize) -> Self {
        let mut tp = 0usize;
        let points = flags
            .iter()
            .enumerate()
            .map(|(i, &hit)| {
                tp += usize::from(hit);
                let recall = if num_gts == 0 { 0.0 } else { tp as f64 / num_gts as f64 };
                (recall, tp as f64 / (i + 1) as f64)
            })
            .collect();
        Self { points }
    }

    /// All-point interpolated area: precision is replaced by its running
    /// maximum from the right, then integrated over recall steps.
    pub fn area(&self) -> f64 {
        let mut envelope: Vec<f64> = self.points.iter().map(|&(_, p)| p).collect();
        for i in (0..envelope.len().saturating_sub(1)).rev() {
            envelope[i] = envelope[i].max(envelope[i + 1]);
        }
        let mut area = 0.0;
        let mut prev_recall = 0.0;
        for (&(recall, _), &precision) in self.points.iter().zip(&envelope) {
            if recall > prev_recall {
                area += (recall - prev_recall) * precision;
                prev_recall = recall;
            }
        }
        area
    }
}

/// AP from precomputed TP/FP flags in rank order.
///
/// Empty ground truth scores 1.0 with no predictions and 0.0 otherwise.
pub fn average_precision_from_flags(flags: &[bool], num_gts: usize) -> f64 {
    if num_gts == 0 {
        return if flags.is_empty() { 1.0 } else { 0.0 };
    }
    PrCurve::from_flags(flags, num_gts).area().clamp(0.0, 1.0)
}

/// Average precision of predictions taken in emission order.
pub fn average_precision(preds: &[BoundingBox], gts: &[BoundingBox], iou_threshold: f64) -> f64 {
    let flags = match_predictions(preds, gts, iou_threshold);
    average_precision_from_flags(&flags, gts.len())
}
