use serde::{Deserialize, Serialize};

use super::policy::Policy;
use super::GrpoConfig;

/// k3 estimator of `KL(π_θ ‖ π_ref)` for one sampled response:
/// `ρ - ln ρ - 1` with `ρ = π_ref / π_θ`. Non-negative, zero iff the two
/// log-probabilities agree.
pub fn kl_estimate(logp_new: f64, logp_ref: f64) -> f64 {
    let d = logp_ref - logp_new;
    // expm1 keeps precision when ρ is close to 1
    (d.exp_m1() - d).max(0.0)
}

/// One sampled group for a single prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRollout {
    pub prompt_id: usize,
    /// Index of each sampled response in the prompt's candidate set.
    pub candidates: Vec<usize>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub logp_new: Vec<f64>,
    pub logp_old: Vec<f64>,
    pub logp_ref: Vec<f64>,
}

impl GroupRollout {
    pub fn len(&self) -> usize {
        self.advantages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.advantages.is_empty()
    }
}

/// Value of the group objective plus per-sample bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub value: f64,
    pub mean_kl: f64,
    /// Samples whose clipped branch was strictly smaller than the unclipped one.
    pub clipped: usize,
    pub samples: usize,
}

struct SampleTerm {
    value: f64,
    /// d(value) / d(log π_θ(o_g)).
    dlogp: f64,
    kl: f64,
    clipped: bool,
}

fn sample_term(logp_new: f64, logp_old: f64, logp_ref: f64, advantage: f64, cfg: &GrpoConfig) -> SampleTerm {
    let ratio = (logp_new - logp_old).exp();
    let eps = cfg.clip_epsilon;
    let unclipped = ratio * advantage;
    let clipped_val = ratio.clamp(1.0 - eps, 1.0 + eps) * advantage;
    let (surrogate, dsurrogate, clipped) = if clipped_val < unclipped {
        // the min takes the clipped branch, which is flat in θ
        (clipped_val, 0.0, true)
    } else {
        (unclipped, unclipped, false)
    };
    let kl = kl_estimate(logp_new, logp_ref);
    let ref_ratio = (logp_ref - logp_new).exp();
    SampleTerm { value: surrogate - cfg.kl_beta * kl, dlogp: dsurrogate - cfg.kl_beta * (1.0 - ref_ratio), kl, clipped }
}

/// `(1/G) Σ_g [min(ρ_g A_g, clip(ρ_g, 1-ε, 1+ε) A_g) - β·KL_g]` with
/// `ρ_g = π_θ(o_g) / π_old(o_g)`, to be maximised.
pub fn grpo_objective(rollout: &GroupRollout, cfg: &GrpoConfig) -> f64 {
    objective_terms(rollout, cfg).value
}

pub(crate) fn objective_terms(rollout: &GroupRollout, cfg: &GrpoConfig) -> ObjectiveTerms {
    let g = rollout.len();
    if g == 0 {
        return ObjectiveTerms::default();
    }
    let mut terms = ObjectiveTerms { samples: g, ..Default::default() };
    for i in 0..g {
        let t = sample_term(rollout.logp_new[i], rollout.logp_old[i], rollout.logp_ref[i], rollout.advantages[i], cfg);
        terms.value += t.value;
        terms.mean_kl += t.kl;
        terms.clipped += usize::from(t.clipped);
    }
    terms.value /= g as f64;
    terms.mean_kl /= g as f64;
    terms
}

/// Objective of `rollout` evaluated at the policy's current parameters, and
/// its analytic gradient with respect to the prompt's parameter block.
/// `rollout.logp_new` is ignored and recomputed from `policy`.
pub fn objective_and_gradient<P: Policy + ?Sized>(
    policy: &P,
    rollout: &GroupRollout,
    cfg: &GrpoConfig,
) -> (ObjectiveTerms, Vec<f64>) {
    let prompt = rollout.prompt_id;
    let log_probs = policy.log_probs(prompt);
    let mut grad = vec![0.0; policy.params(prompt).len()];
    let g = rollout.len();
    if g == 0 {
        return (ObjectiveTerms::default(), grad);
    }
    let mut terms = ObjectiveTerms { samples: g, ..Default::default() };
    for i in 0..g {
        let cand = rollout.candidates[i];
        let t = sample_term(log_probs[cand], rollout.logp_old[i], rollout.logp_ref[i], rollout.advantages[i], cfg);
        terms.value += t.value;
        terms.mean_kl += t.kl;
        terms.clipped += usize::from(t.clipped);
        if t.dlogp != 0.0 {
            for (gj, dj) in grad.iter_mut().zip(policy.grad_log_prob(prompt, cand)) {
                *gj += t.dlogp * dj;
            }
        }
    }
    let inv = 1.0 / g as f64;
    terms.value *= inv;
    terms.mean_kl *= inv;
    grad.iter_mut().for_each(|v| *v *= inv);
    (terms, grad)
}
