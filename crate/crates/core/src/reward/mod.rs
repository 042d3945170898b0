//! Composite rewards `R = R_task + λ·R_format` for the four task families.
//!
//! `R_format` is 1 exactly when the response follows the strict think/answer
//! template. `R_task` is computed from best-effort extraction even when the
//! template is broken, so the two components stay independent.

mod segmenter;
mod truth;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use segmenter::{BoxFillSegmenter, ImageDims, PromptableSegmenter};
pub use truth::{GroundTruth, GroundTruthError};

use crate::bbox::BoundingBox;
use crate::metrics::{self, BinaryMask, MetricError};
use crate::parser::{self, extract_option, OptionSet, ParsedResponse};
use crate::task::TaskKind;

/// IoU threshold of the detection reward.
pub const DETECTION_REWARD_IOU: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("task `{task}` does not accept a `{shape}` ground truth")]
    VariantMismatch { task: TaskKind, shape: &'static str },
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
    #[error("image {image_h}x{image_w} does not match ground-truth mask {mask_h}x{mask_w}")]
    ImageMismatch { image_h: usize, image_w: usize, mask_h: usize, mask_w: usize },
    #[error("segmenter returned a {got_h}x{got_w} mask for a {want_h}x{want_w} image")]
    SegmenterShape { got_h: usize, got_w: usize, want_h: usize, want_w: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

impl RewardError {
    /// True for errors caused by the caller's input rather than by a broken
    /// component behind the scorer.
    pub fn is_validation(&self) -> bool {
        !matches!(self, RewardError::SegmenterShape { .. } | RewardError::Metric(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Weight of the format reward.
    pub lambda: f64,
    /// IoU threshold of the detection reward.
    pub iou_threshold_for_det_reward: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { lambda: 1.0, iou_threshold_for_det_reward: DETECTION_REWARD_IOU }
    }
}

impl RewardConfig {
    pub fn with_lambda(lambda: f64) -> Result<Self, RewardError> {
        let cfg = Self { lambda, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(RewardError::InvalidConfig(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        let t = self.iou_threshold_for_det_reward;
        if !(t > 0.0 && t < 1.0) {
            return Err(RewardError::InvalidConfig(format!("IoU threshold must lie in (0, 1), got {t}")));
        }
        Ok(())
    }
}

/// Per-sample reward components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_task: f64,
    pub r_format: f64,
    pub lambda: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(r_task: f64, r_format: f64, lambda: f64) -> Self {
        Self { r_task, r_format, lambda, total: r_task + lambda * r_format }
    }
}

/// 1 when the response follows the template, else 0.
pub fn format_reward(parsed: &ParsedResponse) -> f64 {
    if parsed.format_ok {
        1.0
    } else {
        0.0
    }
}

fn indicator(hit: bool) -> f64 {
    if hit {
        1.0
    } else {
        0.0
    }
}

pub fn reward_classification(
    parsed: &ParsedResponse,
    gt: char,
    options: &OptionSet,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let predicted = extract_option(parsed.answer_text(), options);
    RewardBreakdown::new(indicator(predicted == Some(gt.to_ascii_uppercase())), format_reward(parsed), cfg.lambda)
}

pub fn reward_detection(parsed: &ParsedResponse, gts: &[BoundingBox], cfg: &RewardConfig) -> RewardBreakdown {
    let preds = parser::parse_boxes(parsed.answer_text());
    let ap = metrics::average_precision(&preds, gts, cfg.iou_threshold_for_det_reward);
    RewardBreakdown::new(ap, format_reward(parsed), cfg.lambda)
}

pub fn reward_segmentation(
    parsed: &ParsedResponse,
    gt: &BinaryMask,
    segmenter: &dyn PromptableSegmenter,
    image: ImageDims,
    cfg: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    if image.height != gt.height() || image.width != gt.width() {
        return Err(RewardError::ImageMismatch {
            image_h: image.height,
            image_w: image.width,
            mask_h: gt.height(),
            mask_w: gt.width(),
        });
    }
    let boxes = parser::parse_boxes(parsed.answer_text());
    let predicted = segmenter.segment(image, &boxes);
    if !predicted.same_shape(gt) {
        return Err(RewardError::SegmenterShape {
            got_h: predicted.height(),
            got_w: predicted.width(),
            want_h: gt.height(),
            want_w: gt.width(),
        });
    }
    let d = metrics::dice(&predicted, gt)?;
    Ok(RewardBreakdown::new(d, format_reward(parsed), cfg.lambda))
}

/// Ground truth of a VQA item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VqaTruth<'a> {
    Closed(&'a str),
    Open(&'a str),
}

pub fn reward_vqa(
    parsed: &ParsedResponse,
    gt: VqaTruth<'_>,
    options: &OptionSet,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let r_task = match gt {
        VqaTruth::Closed(answer) => indicator(closed_answer_matches(parsed.answer_text(), answer, options)),
        VqaTruth::Open(reference) => metrics::bleu4(parsed.answer_text(), reference).score,
    };
    RewardBreakdown::new(r_task, format_reward(parsed), cfg.lambda)
}

/// A closed answer is an option letter when it names an option (or maps to
/// one by full text); otherwise it is compared as normalised text.
fn closed_answer_matches(answer: &str, truth: &str, options: &OptionSet) -> bool {
    match truth_label(truth, options) {
        Some(label) => extract_option(answer, options) == Some(label),
        None => normalize(answer) == normalize(truth),
    }
}

fn truth_label(truth: &str, options: &OptionSet) -> Option<char> {
    let t = truth.trim().trim_start_matches('(').trim_end_matches(')');
    let mut chars = t.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if c.is_ascii_alphabetic() && options.contains(c) {
            return Some(c.to_ascii_uppercase());
        }
    }
    options.label_for_text(truth)
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").trim_end_matches(['.', '!', '?']).to_lowercase()
}

/// Per-request context the task rewards may need.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskContext {
    /// Lettered options; letters `A..=Z` without texts when absent.
    pub options: Option<OptionSet>,
    /// Image dimensions for segmentation; the mask size when absent.
    pub image: Option<ImageDims>,
}

/// What was pulled out of the answer, for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extraction {
    Label(Option<char>),
    Boxes(usize),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutcome {
    pub breakdown: RewardBreakdown,
    pub parsed: ParsedResponse,
    pub extracted: Extraction,
}

/// Reward scorer with a fixed config and segmenter. Cheap to clone and safe
/// to share across threads.
#[derive(Clone)]
pub struct Scorer {
    config: RewardConfig,
    segmenter: Arc<dyn PromptableSegmenter>,
}

impl std::fmt::Debug for Scorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scorer").field("config", &self.config).finish_non_exhaustive()
    }
}

impl Scorer {
    pub fn new(config: RewardConfig) -> Result<Self, RewardError> {
        Self::with_segmenter(config, Arc::new(BoxFillSegmenter))
    }

    pub fn with_segmenter(config: RewardConfig, segmenter: Arc<dyn PromptableSegmenter>) -> Result<Self, RewardError> {
        config.validate()?;
        Ok(Self { config, segmenter })
    }

    pub fn config(&self) -> &RewardConfig {
        &self.config
    }

    pub fn segmenter(&self) -> &dyn PromptableSegmenter {
        self.segmenter.as_ref()
    }

    /// Copy of this scorer with a different format weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self, RewardError> {
        let config = RewardConfig { lambda, ..self.config };
        config.validate()?;
        Ok(Self { config, segmenter: Arc::clone(&self.segmenter) })
    }

    pub fn score(
        &self,
        task: TaskKind,
        raw: &str,
        gt: &GroundTruth,
        ctx: &TaskContext,
    ) -> Result<RewardBreakdown, RewardError> {
        self.score_detailed(task, raw, gt, ctx).map(|o| o.breakdown)
    }

    pub fn score_detailed(
        &self,
        task: TaskKind,
        raw: &str,
        gt: &GroundTruth,
        ctx: &TaskContext,
    ) -> Result<ScoreOutcome, RewardError> {
        if gt.task_kind() != task {
            return Err(RewardError::VariantMismatch { task, shape: gt.shape_name() });
        }
        let parsed = parser::parse_response(raw);
        let letters;
        let options = match &ctx.options {
            Some(o) if !o.is_empty() => o,
            _ => {
                letters = OptionSet::letters_only();
                &letters
            }
        };
        let cfg = &self.config;
        let (breakdown, extracted) = match gt {
            GroundTruth::ClsLabel(label) => (
                reward_classification(&parsed, *label, options, cfg),
                Extraction::Label(extract_option(parsed.answer_text(), options)),
            ),
            GroundTruth::DetBoxes(gts) => (
                reward_detection(&parsed, gts, cfg),
                Extraction::Boxes(parser::parse_boxes(parsed.answer_text()).len()),
            ),
            GroundTruth::SegMask(mask) => {
                let image = ctx.image.unwrap_or(ImageDims::new(mask.height(), mask.width()));
                (
                    reward_segmentation(&parsed, mask, self.segmenter.as_ref(), image, cfg)?,
                    Extraction::Boxes(parser::parse_boxes(parsed.answer_text()).len()),
                )
            }
            GroundTruth::ClosedAnswer(answer) => {
                let extracted = match truth_label(answer, options) {
                    Some(_) => Extraction::Label(extract_option(parsed.answer_text(), options)),
                    None => Extraction::Text(parsed.answer_text().to_string()),
                };
                (reward_vqa(&parsed, VqaTruth::Closed(answer), options, cfg), extracted)
            }
            GroundTruth::OpenAnswer(reference) => (
                reward_vqa(&parsed, VqaTruth::Open(reference), options, cfg),
                Extraction::Text(parsed.answer_text().to_string()),
            ),
        };
        Ok(ScoreOutcome { breakdown, parsed, extracted })
    }
}
