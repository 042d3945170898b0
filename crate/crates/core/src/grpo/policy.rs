use serde::{Deserialize, Serialize};

use super::GrpoError;

/// A policy over a finite candidate set per prompt, with one independent
/// parameter block per prompt.
pub trait Policy {
    fn num_prompts(&self) -> usize;
    fn num_candidates(&self, prompt: usize) -> usize;
    fn params(&self, prompt: usize) -> &[f64];
    fn params_mut(&mut self, prompt: usize) -> &mut [f64];
    /// `log π(j | prompt)` for every candidate `j`.
    fn log_probs(&self, prompt: usize) -> Vec<f64>;
    /// `∇ log π(candidate | prompt)` with respect to `params(prompt)`.
    fn grad_log_prob(&self, prompt: usize, candidate: usize) -> Vec<f64>;

    fn probs(&self, prompt: usize) -> Vec<f64> {
        self.log_probs(prompt).into_iter().map(f64::exp).collect()
    }
}

/// Softmax over one logit per candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxPolicy {
    logits: Vec<Vec<f64>>,
}

impl SoftmaxPolicy {
    /// All-zero logits: the uniform policy.
    pub fn uniform(candidates_per_prompt: &[usize]) -> Result<Self, GrpoError> {
        Self::from_logits(candidates_per_prompt.iter().map(|&k| vec![0.0; k]).collect())
    }

    pub fn from_logits(logits: Vec<Vec<f64>>) -> Result<Self, GrpoError> {
        for (i, row) in logits.iter().enumerate() {
            if row.is_empty() {
                return Err(GrpoError::InvalidConfig(format!("prompt {i} has no candidates")));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(GrpoError::InvalidConfig(format!("prompt {i} has a non-finite logit")));
            }
        }
        Ok(Self { logits })
    }

    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|v| v - lse).collect()
}

impl Policy for SoftmaxPolicy {
    fn num_prompts(&self) -> usize {
        self.logits.len()
    }

    fn num_candidates(&self, prompt: usize) -> usize {
        self.logits[prompt].len()
    }

    fn params(&self, prompt: usize) -> &[f64] {
        &self.logits[prompt]
    }

    fn params_mut(&mut self, prompt: usize) -> &mut [f64] {
        &mut self.logits[prompt]
    }

    fn log_probs(&self, prompt: usize) -> Vec<f64> {
        log_softmax(&self.logits[prompt])
    }

    fn grad_log_prob(&self, prompt: usize, candidate: usize) -> Vec<f64> {
        let mut g: Vec<f64> = self.probs(prompt).into_iter().map(|p| -p).collect();
        g[candidate] += 1.0;
        g
    }
}
