//! Verifiable-reward toolkit for reinforcement fine-tuning of structured-output
//! vision-language models.
//!
//! The crate is organised around the life of a single model response:
//!
//! - [`parser`] splits raw text into the `<think>`/`<answer>` protocol and pulls
//!   out option letters and bounding boxes.
//! - [`metrics`] holds IoU, average precision, Dice, accuracy, F1 and BLEU-4.
//! - [`reward`] combines a task metric with the binary format reward.
//! - [`grpo`] runs group-relative policy optimisation (and the supervised
//!   cross-entropy warm-up) on a toy categorical policy.
//! - [`scaling`] plans patch-aligned resizes under a token budget.
//! - [`eval`] ingests prediction files, bootstraps confidence intervals, runs
//!   Wilcoxon signed-rank tests and ranks models.

pub mod bbox;
pub mod eval;
pub mod grpo;
pub mod metrics;
pub mod parser;
pub mod reward;
pub mod scaling;
pub mod task;

pub use bbox::BoundingBox;
pub use task::TaskKind;
