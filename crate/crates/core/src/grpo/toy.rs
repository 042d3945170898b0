//! End-to-end toy run: a softmax policy over a handful of canned responses
//! per prompt, scored by the real reward engine. An optional supervised
//! warm-up precedes GRPO; the reference policy is the one GRPO starts from.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::{Policy, SoftmaxPolicy};
use super::train::{grpo_step, sft_step, SftExample};
use super::{GrpoConfig, GrpoError};
use crate::parser::{route_task, OptionSet};
use crate::reward::{GroundTruth, RewardConfig, Scorer, TaskContext};
use crate::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPrompt {
    pub prompt: String,
    /// Routed from the prompt text when absent.
    #[serde(default)]
    pub task: Option<TaskKind>,
    pub gt: GroundTruth,
    pub candidates: Vec<String>,
    #[serde(default)]
    pub sft_target: Option<usize>,
}

/// Flat key/value schema: the GRPO keys (`group_size`, `clip_epsilon`,
/// `kl_beta`, `std_floor`, `std_kind`, `learning_rate`, `inner_steps`,
/// `iterations`, `seed`) sit at top level beside the SFT keys and the
/// `[[prompts]]` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub sft_steps: usize,
    #[serde(default = "default_sft_lr")]
    pub sft_learning_rate: f64,
    #[serde(flatten)]
    pub grpo: GrpoConfig,
    pub prompts: Vec<ToyPrompt>,
}

fn default_lambda() -> f64 {
    1.0
}

fn default_sft_lr() -> f64 {
    1.0
}

impl ToyConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, GrpoError> {
        toml::from_str(s).map_err(|e| GrpoError::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GrpoError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        self.grpo.validate()?;
        if self.prompts.is_empty() {
            return Err(GrpoError::InvalidConfig("no prompts".into()));
        }
        if !(self.sft_learning_rate >= 0.0 && self.sft_learning_rate.is_finite()) {
            return Err(GrpoError::InvalidConfig("sft_learning_rate must be >= 0".into()));
        }
        for (i, p) in self.prompts.iter().enumerate() {
            if p.candidates.is_empty() {
                return Err(GrpoError::InvalidConfig(format!("prompt {i} has no candidates")));
            }
            if let Some(t) = p.sft_target {
                if t >= p.candidates.len() {
                    return Err(GrpoError::TargetOutOfRange { prompt: i, target: t, candidates: p.candidates.len() });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    /// Mean reward of this step's sampled groups.
    pub mean_reward: f64,
    /// Exact `E_π[R]` averaged over prompts, after the update.
    pub expected_reward: f64,
    pub mean_kl: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    /// `R` of every candidate, per prompt.
    pub candidate_rewards: Vec<Vec<f64>>,
    /// SFT loss before each warm-up step, then the loss after the last one.
    pub sft_losses: Vec<f64>,
    /// Expected reward of the policy GRPO starts from.
    pub initial_expected_reward: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_probs: Vec<Vec<f64>>,
}

impl ToyReport {
    pub fn final_expected_reward(&self) -> f64 {
        self.trajectory.last().map_or(self.initial_expected_reward, |p| p.expected_reward)
    }

    /// First 1-based GRPO step whose expected reward reaches `threshold`.
    pub fn first_step_reaching(&self, threshold: f64) -> Option<usize> {
        self.trajectory.iter().find(|p| p.expected_reward >= threshold).map(|p| p.step)
    }
}

/// Exact expected reward under `policy`, averaged over prompts.
pub fn expected_reward<P: Policy + ?Sized>(policy: &P, rewards: &[Vec<f64>]) -> f64 {
    let total: f64 =
        rewards.iter().enumerate().map(|(i, r)| policy.probs(i).iter().zip(r).map(|(p, r)| p * r).sum::<f64>()).sum();
    total / rewards.len().max(1) as f64
}

struct BoundPrompt {
    task: TaskKind,
    ctx: TaskContext,
}

pub fn run_toy(config: &ToyConfig) -> Result<ToyReport, GrpoError> {
    config.validate()?;
    let scorer = Scorer::new(RewardConfig::with_lambda(config.lambda)?)?;
    let bound: Vec<BoundPrompt> = config
        .prompts
        .iter()
        .map(|p| BoundPrompt {
            task: p.task.unwrap_or_else(|| route_task(&p.prompt)),
            ctx: TaskContext { options: Some(OptionSet::from_prompt(&p.prompt)), image: None },
        })
        .collect();
    let score = |prompt: usize, cand: usize| -> Result<f64, GrpoError> {
        let p = &config.prompts[prompt];
        let b = &bound[prompt];
        Ok(scorer.score(b.task, &p.candidates[cand], &p.gt, &b.ctx)?.total)
    };

    let mut candidate_rewards = Vec::with_capacity(config.prompts.len());
    for (i, p) in config.prompts.iter().enumerate() {
        candidate_rewards.push((0..p.candidates.len()).map(|c| score(i, c)).collect::<Result<Vec<_>, _>>()?);
    }

    let sizes: Vec<usize> = config.prompts.iter().map(|p| p.candidates.len()).collect();
    let mut policy = SoftmaxPolicy::uniform(&sizes)?;

    let batch: Vec<SftExample> = config
        .prompts
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.sft_target.map(|target| SftExample { prompt: i, target }))
        .collect();
    let mut sft_losses = Vec::new();
    if !batch.is_empty() && config.sft_steps > 0 {
        for _ in 0..config.sft_steps {
            sft_losses.push(sft_step(&mut policy, &batch, config.sft_learning_rate)?);
        }
        sft_losses.push(super::sft_loss(&policy, &batch)?);
    }

    let reference = policy.clone();
    let initial_expected_reward = expected_reward(&policy, &candidate_rewards);
    let prompts: Vec<usize> = (0..config.prompts.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.grpo.seed);
    let mut trajectory = Vec::with_capacity(config.grpo.iterations);
    for step in 1..=config.grpo.iterations {
        let (_, d) =
            grpo_step(&mut policy, &reference, &prompts, |p, c| Ok(candidate_rewards[p][c]), &config.grpo, &mut rng)?;
        trajectory.push(TrajectoryPoint {
            step,
            mean_reward: d.mean_reward,
            expected_reward: expected_reward(&policy, &candidate_rewards),
            mean_kl: d.mean_kl,
            clip_fraction: d.clip_fraction,
        });
        if step % 50 == 0 {
            log::debug!("grpo step {step}: E[R] = {:.4}", trajectory[step - 1].expected_reward);
        }
    }

    Ok(ToyReport {
        candidate_rewards,
        sft_losses,
        initial_expected_reward,
        trajectory,
        final_probs: prompts.iter().map(|&i| policy.probs(i)).collect(),
    })
}
