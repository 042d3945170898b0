use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::evaluate::{default_scorer, record_context};
use super::records::TaskRecord;
use super::EvalError;

/// Largest sample size handled by exact enumeration under `Auto`.
const EXACT_MAX_N: usize = 25;
const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WilcoxonMethod {
    /// Exact for `n ≤ 25`, normal approximation above.
    #[default]
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of the positive differences `a - b`.
    pub w_plus: f64,
    /// Non-zero differences used.
    pub n: usize,
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, EvalError> {
    wilcoxon_signed_rank_with(a, b, WilcoxonMethod::Auto)
}

/// Two-sided paired signed-rank test. Zero differences are dropped; tied
/// absolute differences get their average rank.
pub fn wilcoxon_signed_rank_with(a: &[f64], b: &[f64], method: WilcoxonMethod) -> Result<WilcoxonResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let mut diffs = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        if !d.is_finite() {
            return Err(EvalError::NonFinite);
        }
        if d != 0.0 {
            diffs.push(d);
        }
    }
    let n = diffs.len();
    if n < MIN_PAIRS {
        return Err(EvalError::Underpowered(n));
    }

    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    // doubled ranks are integers even when ties average to a half
    let mut doubled = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[j + 1].abs() == diffs[i].abs() {
            j += 1;
        }
        let r2 = (i + 1 + j + 1) as u64;
        doubled[i..=j].iter_mut().for_each(|r| *r = r2);
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }
    let w2: u64 = diffs.iter().zip(&doubled).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    let method = match method {
        WilcoxonMethod::Auto if n <= EXACT_MAX_N => WilcoxonMethod::Exact,
        WilcoxonMethod::Auto => WilcoxonMethod::Normal,
        m => m,
    };
    let p_value = match method {
        WilcoxonMethod::Exact => exact_p(&doubled, w2),
        _ => normal_p(n, &tie_sizes, w2 as f64 / 2.0),
    };
    Ok(WilcoxonResult { w_plus: w2 as f64 / 2.0, n, p_value, method })
}

/// `2 · min(P(W ≤ w), P(W ≥ w))` under the null where each sign is a fair
/// coin, counting subsets of the (doubled) ranks by their sum.
fn exact_p(doubled: &[u64], w2: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(doubled.len() as i32);
    let w = w2 as usize;
    let lower: f64 = counts[..=w].iter().sum();
    let upper: f64 = counts[w..].iter().sum();
    (2.0 * lower.min(upper) / all).min(1.0)
}

fn normal_p(n: usize, tie_sizes: &[usize], w_plus: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes.iter().map(|&t| (t as f64).powi(3) - t as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let dev = ((w_plus - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).clamp(f64::MIN_POSITIVE, 1.0)
}

/// One model pair on one task, paired by record id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub task: String,
    pub model_a: String,
    pub model_b: String,
    pub pairs: usize,
    pub result: Option<WilcoxonResult>,
    /// Why the test was not run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

/// Signed-rank tests between every model pair within each task, on
/// per-record task rewards paired by id. Underpowered pairs are reported as
/// skipped rather than failing the run.
pub fn pairwise_wilcoxon(records: &[TaskRecord]) -> Result<Vec<PairwiseTest>, EvalError> {
    let scorer = default_scorer();
    let mut by_task: BTreeMap<&str, BTreeMap<&str, BTreeMap<&str, f64>>> = BTreeMap::new();
    for r in records {
        let score = scorer.score(r.task, &r.response, &r.gt, &record_context(r))?.r_task;
        by_task.entry(r.task_name()).or_default().entry(r.model.as_str()).or_default().insert(r.id.as_str(), score);
    }

    let mut out = Vec::new();
    for (task, models) in &by_task {
        let names: Vec<&&str> = models.keys().collect();
        for (i, ma) in names.iter().enumerate() {
            for mb in &names[i + 1..] {
                let (sa, sb) = (&models[**ma], &models[**mb]);
                let (xa, xb): (Vec<f64>, Vec<f64>) =
                    sa.iter().filter_map(|(id, v)| sb.get(id).map(|w| (*v, *w))).unzip();
                let (result, skipped) = match wilcoxon_signed_rank(&xa, &xb) {
                    Ok(r) => (Some(r), None),
                    Err(e @ EvalError::Underpowered(_)) => {
                        log::warn!("{task}: {ma} vs {mb} skipped: {e}");
                        (None, Some(e.to_string()))
                    }
                    Err(e) => return Err(e),
                };
                out.push(PairwiseTest {
                    task: task.to_string(),
                    model_a: ma.to_string(),
                    model_b: mb.to_string(),
                    pairs: xa.len(),
                    result,
                    skipped,
                });
            }
        }
    }
    Ok(out)
}
