//! Evaluation formulas: IoU and average precision for boxes, Dice for masks,
//! accuracy and F1 for labels, and BLEU-4 for free text.

mod bleu;
mod classification;
mod detection;
mod mask;

pub use bleu::{bleu4, bleu4_tokens, tokenize, BleuBreakdown};
pub use classification::{accuracy, f1_multiclass, ConfusionCounts, F1Averaging};
pub use detection::{average_precision, average_precision_from_flags, iou, match_predictions, PrCurve};
pub use mask::{dice, BinaryMask};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("mask dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("metric needs at least one sample")]
    Empty,
    #[error("truth and prediction lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
}
