//! Group-relative policy optimisation and the supervised cross-entropy
//! warm-up, validated on a toy categorical policy.
//!
//! The toy policy keeps one logit vector per prompt over an enumerated set of
//! candidate responses, so every log-probability and gradient is exact.

mod advantage;
mod objective;
mod policy;
pub mod toy;
mod train;

pub use advantage::{compute_advantages, compute_advantages_with, StdKind};
pub use objective::{grpo_objective, kl_estimate, objective_and_gradient, GroupRollout, ObjectiveTerms};
pub use policy::{Policy, SoftmaxPolicy};
pub use train::{grpo_step, sample_group, sft_gradient, sft_loss, sft_step, SftExample, StepDiagnostics};

use serde::{Deserialize, Serialize};

use crate::reward::RewardError;

#[derive(Debug, thiserror::Error)]
pub enum GrpoError {
    #[error("a group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("invalid GRPO config: {0}")]
    InvalidConfig(String),
    #[error("prompt {prompt} has no candidate {target} (only {candidates})")]
    TargetOutOfRange { prompt: usize, target: usize, candidates: usize },
    #[error("unknown prompt {0}")]
    UnknownPrompt(usize),
    #[error("reward: {0}")]
    Reward(#[from] RewardError),
    #[error("config file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Hyper-parameters of a GRPO run. Defaults: `G = 8`, `ε = 0.2`, `β = 0.001`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrpoConfig {
    pub group_size: usize,
    pub clip_epsilon: f64,
    pub kl_beta: f64,
    /// Groups whose reward spread falls below this get zero advantages.
    pub std_floor: f64,
    pub std_kind: StdKind,
    pub learning_rate: f64,
    /// Gradient steps taken on each sampled batch before re-sampling.
    pub inner_steps: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            clip_epsilon: 0.2,
            kl_beta: 0.001,
            std_floor: 1e-8,
            std_kind: StdKind::Population,
            learning_rate: 1.0,
            inner_steps: 1,
            iterations: 500,
            seed: 42,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<(), GrpoError> {
        let bad = |msg: String| Err(GrpoError::InvalidConfig(msg));
        if self.group_size < 2 {
            return bad(format!("group_size must be >= 2, got {}", self.group_size));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon.is_finite()) {
            return bad(format!("clip_epsilon must be > 0, got {}", self.clip_epsilon));
        }
        if !(self.kl_beta >= 0.0 && self.kl_beta.is_finite()) {
            return bad(format!("kl_beta must be >= 0, got {}", self.kl_beta));
        }
        if !(self.std_floor > 0.0 && self.std_floor.is_finite()) {
            return bad(format!("std_floor must be > 0, got {}", self.std_floor));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be >= 0, got {}", self.learning_rate));
        }
        if self.inner_steps == 0 {
            return bad("inner_steps must be >= 1".into());
        }
        Ok(())
    }
}
