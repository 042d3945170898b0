use rand::Rng;
use serde::{Deserialize, Serialize};

use super::advantage::compute_advantages_with;
use super::objective::{objective_and_gradient, GroupRollout};
use super::policy::Policy;
use super::{GrpoConfig, GrpoError};

/// One supervised pair: the target candidate for a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftExample {
    pub prompt: usize,
    pub target: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Mean reward of the sampled responses.
    pub mean_reward: f64,
    /// Mean k3 KL to the reference over the sampled responses, before the update.
    pub mean_kl: f64,
    /// Objective value before the update.
    pub objective: f64,
    /// Fraction of (sample, inner step) pairs where clipping was active.
    pub clip_fraction: f64,
    /// Groups whose rewards were all equal (zero advantage).
    pub flat_groups: usize,
}

/// Draw `g` candidate indices i.i.d. from `probs` by inverse CDF.
pub fn sample_group<R: Rng + ?Sized>(probs: &[f64], g: usize, rng: &mut R) -> Vec<usize> {
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    (0..g)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (j, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return j;
                }
            }
            last
        })
        .collect()
}

fn check_prompt<P: Policy + ?Sized>(policy: &P, prompt: usize) -> Result<(), GrpoError> {
    if prompt >= policy.num_prompts() {
        return Err(GrpoError::UnknownPrompt(prompt));
    }
    Ok(())
}

/// One GRPO iteration: sample a group per prompt from the current policy
/// (which becomes `π_old`), score every response with `reward_fn(prompt,
/// candidate)` in sampling order, normalise rewards within each group, then
/// take `cfg.inner_steps` gradient-ascent steps on the mean group objective.
pub fn grpo_step<P, F, R>(
    policy: &mut P,
    reference: &P,
    prompts: &[usize],
    mut reward_fn: F,
    cfg: &GrpoConfig,
    rng: &mut R,
) -> Result<(Vec<GroupRollout>, StepDiagnostics), GrpoError>
where
    P: Policy + ?Sized,
    F: FnMut(usize, usize) -> Result<f64, GrpoError>,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let mut rollouts = Vec::with_capacity(prompts.len());
    let mut diag = StepDiagnostics::default();
    if prompts.is_empty() {
        return Ok((rollouts, diag));
    }

    for &prompt in prompts {
        check_prompt(policy, prompt)?;
        let old_lp = policy.log_probs(prompt);
        let ref_lp = reference.log_probs(prompt);
        let probs: Vec<f64> = old_lp.iter().map(|v| v.exp()).collect();
        let candidates = sample_group(&probs, cfg.group_size, rng);
        let rewards = candidates.iter().map(|&c| reward_fn(prompt, c)).collect::<Result<Vec<_>, _>>()?;
        let advantages = compute_advantages_with(&rewards, cfg.std_floor, cfg.std_kind)?;
        if advantages.iter().all(|&a| a == 0.0) {
            diag.flat_groups += 1;
        }
        diag.mean_reward += rewards.iter().sum::<f64>();
        rollouts.push(GroupRollout {
            prompt_id: prompt,
            logp_new: candidates.iter().map(|&c| old_lp[c]).collect(),
            logp_old: candidates.iter().map(|&c| old_lp[c]).collect(),
            logp_ref: candidates.iter().map(|&c| ref_lp[c]).collect(),
            candidates,
            rewards,
            advantages,
        });
    }
    let n = prompts.len() as f64;
    diag.mean_reward /= n * cfg.group_size as f64;

    let mut clipped = 0usize;
    let mut samples = 0usize;
    for inner in 0..cfg.inner_steps {
        let mut grads = Vec::with_capacity(rollouts.len());
        for r in &rollouts {
            let (terms, grad) = objective_and_gradient(&*policy, r, cfg);
            clipped += terms.clipped;
            samples += terms.samples;
            if inner == 0 {
                diag.objective += terms.value / n;
                diag.mean_kl += terms.mean_kl / n;
            }
            grads.push(grad);
        }
        for (r, grad) in rollouts.iter().zip(grads) {
            for (theta, g) in policy.params_mut(r.prompt_id).iter_mut().zip(grad) {
                *theta += cfg.learning_rate * g / n;
            }
        }
    }
    diag.clip_fraction = if samples == 0 { 0.0 } else { clipped as f64 / samples as f64 };

    for r in &mut rollouts {
        let lp = policy.log_probs(r.prompt_id);
        r.logp_new = r.candidates.iter().map(|&c| lp[c]).collect();
    }
    Ok((rollouts, diag))
}

fn check_examples<P: Policy + ?Sized>(policy: &P, batch: &[SftExample]) -> Result<(), GrpoError> {
    for ex in batch {
        check_prompt(policy, ex.prompt)?;
        let candidates = policy.num_candidates(ex.prompt);
        if ex.target >= candidates {
            return Err(GrpoError::TargetOutOfRange { prompt: ex.prompt, target: ex.target, candidates });
        }
    }
    Ok(())
}

/// Token-level cross-entropy collapsed to whole responses:
/// `-(1/|D|) Σ log π(y | x)`.
pub fn sft_loss<P: Policy + ?Sized>(policy: &P, batch: &[SftExample]) -> Result<f64, GrpoError> {
    check_examples(policy, batch)?;
    if batch.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = batch.iter().map(|ex| -policy.log_probs(ex.prompt)[ex.target]).sum();
    Ok(total / batch.len() as f64)
}

/// Gradient of [`sft_loss`] for each prompt that appears in the batch, in
/// first-appearance order.
pub fn sft_gradient<P: Policy + ?Sized>(policy: &P, batch: &[SftExample]) -> Result<Vec<(usize, Vec<f64>)>, GrpoError> {
    check_examples(policy, batch)?;
    let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
    let inv = 1.0 / batch.len().max(1) as f64;
    for ex in batch {
        let g = policy.grad_log_prob(ex.prompt, ex.target);
        let slot = match out.iter().position(|(p, _)| *p == ex.prompt) {
            Some(i) => i,
            None => {
                out.push((ex.prompt, vec![0.0; g.len()]));
                out.len() - 1
            }
        };
        for (acc, v) in out[slot].1.iter_mut().zip(g) {
            *acc -= v * inv;
        }
    }
    Ok(out)
}

/// One gradient-descent step on the batch; returns the loss before the step.
pub fn sft_step<P: Policy + ?Sized>(
    policy: &mut P,
    batch: &[SftExample],
    learning_rate: f64,
) -> Result<f64, GrpoError> {
    let loss = sft_loss(policy, batch)?;
    for (prompt, grad) in sft_gradient(policy, batch)? {
        for (theta, g) in policy.params_mut(prompt).iter_mut().zip(grad) {
            *theta -= learning_rate * g;
        }
    }
    Ok(loss)
}
