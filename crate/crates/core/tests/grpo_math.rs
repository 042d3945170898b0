use pathreward_core::grpo::toy::{run_toy, ToyConfig};
use pathreward_core::grpo::{
    compute_advantages, grpo_objective, grpo_step, objective_and_gradient, sample_group, sft_gradient, sft_loss,
    GroupRollout, GrpoConfig, Policy, SftExample, SoftmaxPolicy,
};
use pathreward_testkit as tk;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-5;

/// A random rollout for prompt 0 of `policy`, with `π_old` perturbed away
/// from the current parameters so both clip branches get exercised.
fn random_rollout(rng: &mut ChaCha8Rng, policy: &SoftmaxPolicy, g: usize) -> GroupRollout {
    let old_logits: Vec<f64> = policy.params(0).iter().map(|v| v + rng.gen_range(-0.4..0.4)).collect();
    let reference_logits: Vec<f64> = policy.params(0).iter().map(|v| v + rng.gen_range(-1.0..1.0)).collect();
    let old = SoftmaxPolicy::from_logits(vec![old_logits]).unwrap();
    let reference = SoftmaxPolicy::from_logits(vec![reference_logits]).unwrap();
    let candidates = sample_group(&old.probs(0), g, rng);
    let rewards: Vec<f64> = (0..g).map(|_| rng.gen_range(0.0..2.0)).collect();
    let advantages = compute_advantages(&rewards, 1e-8).unwrap();
    let (lo, lr, ln) = (old.log_probs(0), reference.log_probs(0), policy.log_probs(0));
    GroupRollout {
        prompt_id: 0,
        logp_new: candidates.iter().map(|&c| ln[c]).collect(),
        logp_old: candidates.iter().map(|&c| lo[c]).collect(),
        logp_ref: candidates.iter().map(|&c| lr[c]).collect(),
        candidates,
        rewards,
        advantages,
    }
}

fn objective_at(logits: &[f64], rollout: &GroupRollout, cfg: &GrpoConfig) -> f64 {
    let p = SoftmaxPolicy::from_logits(vec![logits.to_vec()]).unwrap();
    let lp = p.log_probs(0);
    let mut r = rollout.clone();
    r.logp_new = r.candidates.iter().map(|&c| lp[c]).collect();
    grpo_objective(&r, cfg)
}

/// True when a finite-difference step could cross a clip boundary, where
/// the objective is not differentiable.
fn near_kink(rollout: &GroupRollout, logits: &[f64], eps: f64) -> bool {
    let p = SoftmaxPolicy::from_logits(vec![logits.to_vec()]).unwrap();
    let lp = p.log_probs(0);
    rollout.candidates.iter().zip(&rollout.logp_old).any(|(&c, o)| {
        let ratio = (lp[c] - o).exp();
        (ratio - (1.0 + eps)).abs() < 1e-3 || (ratio - (1.0 - eps)).abs() < 1e-3
    })
}

#[test]
fn grpo_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    let mut clipped_cases = 0;
    while checked < 150 {
        let k = rng.gen_range(2..=6);
        let logits: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let policy = SoftmaxPolicy::from_logits(vec![logits.clone()]).unwrap();
        let cfg = GrpoConfig { kl_beta: rng.gen_range(0.0..0.5), ..Default::default() };
        let g = rng.gen_range(2..=8);
        let rollout = random_rollout(&mut rng, &policy, g);
        if near_kink(&rollout, &logits, cfg.clip_epsilon) {
            continue;
        }
        let (terms, analytic) = objective_and_gradient(&policy, &rollout, &cfg);
        assert!((terms.value - grpo_objective(&rollout, &cfg)).abs() < 1e-12);
        let numeric = tk::central_diff(|x| objective_at(x, &rollout, &cfg), &logits, H);
        let err = tk::max_rel_err(&analytic, &numeric, 1e-3);
        assert!(err < TOL, "rel err {err}: {analytic:?} vs {numeric:?}");
        clipped_cases += usize::from(terms.clipped > 0);
        checked += 1;
    }
    assert!(clipped_cases > 10, "clip branch barely exercised: {clipped_cases}");
}

#[test]
fn on_policy_gradient_is_advantage_weighted_score() {
    // at θ = θ_old every ratio is 1, nothing clips, and the gradient is
    // (1/G) Σ A_g ∇log π(o_g) − β (1 − π_ref/π) ∇log π(o_g)
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let logits: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let policy = SoftmaxPolicy::from_logits(vec![logits.clone()]).unwrap();
        let mut rollout = random_rollout(&mut rng, &policy, 8);
        rollout.logp_old = rollout.logp_new.clone();
        let cfg = GrpoConfig::default();
        let (terms, analytic) = objective_and_gradient(&policy, &rollout, &cfg);
        assert_eq!(terms.clipped, 0);
        let mut expected = vec![0.0; 4];
        for i in 0..8 {
            let coeff = rollout.advantages[i] - cfg.kl_beta * (1.0 - (rollout.logp_ref[i] - rollout.logp_new[i]).exp());
            for (e, d) in expected.iter_mut().zip(policy.grad_log_prob(0, rollout.candidates[i])) {
                *e += coeff * d / 8.0;
            }
        }
        assert!(tk::max_rel_err(&analytic, &expected, 1e-9) < 1e-12);
        let numeric = tk::central_diff(|x| objective_at(x, &rollout, &cfg), &logits, H);
        assert!(tk::max_rel_err(&analytic, &numeric, 1e-3) < TOL);
    }
}

#[test]
fn sft_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..150 {
        let prompts = rng.gen_range(1..=3);
        let sizes: Vec<usize> = (0..prompts).map(|_| rng.gen_range(2..=6)).collect();
        let logits: Vec<Vec<f64>> = sizes.iter().map(|&k| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let policy = SoftmaxPolicy::from_logits(logits.clone()).unwrap();
        let batch: Vec<SftExample> = (0..rng.gen_range(1..=6))
            .map(|_| {
                let prompt = rng.gen_range(0..prompts);
                SftExample { prompt, target: rng.gen_range(0..sizes[prompt]) }
            })
            .collect();
        let grads = sft_gradient(&policy, &batch).unwrap();
        for (prompt, analytic) in grads {
            let numeric = tk::central_diff(
                |x| {
                    let mut l = logits.clone();
                    l[prompt] = x.to_vec();
                    sft_loss(&SoftmaxPolicy::from_logits(l).unwrap(), &batch).unwrap()
                },
                &logits[prompt],
                H,
            );
            let err = tk::max_rel_err(&analytic, &numeric, 1e-3);
            assert!(err < TOL, "rel err {err}");
        }
    }
}

#[test]
fn clipped_terms_stay_in_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..2000 {
        let ratio: f64 = rng.gen_range(0.2..3.0);
        let adv: f64 = rng.gen_range(-3.0..3.0);
        let cfg = GrpoConfig { kl_beta: 0.0, ..Default::default() };
        let r = GroupRollout {
            prompt_id: 0,
            candidates: vec![0],
            rewards: vec![0.0],
            advantages: vec![adv],
            logp_new: vec![ratio.ln() - 1.0],
            logp_old: vec![-1.0],
            logp_ref: vec![-1.0],
        };
        let v = grpo_objective(&r, &cfg);
        let cands = [ratio * adv, 0.8 * adv, 1.2 * adv];
        let lo = cands.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = cands.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        if adv > 0.0 {
            assert!(v <= 1.2 * adv + 1e-12);
        }
        let want = tk::grpo_objective_scalar(&[(r.logp_new[0] - r.logp_old[0]).exp()], &[adv], &[1.0], 0.2, 0.0);
        assert!((v - want).abs() < 1e-12);
    }
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let mut p = SoftmaxPolicy::from_logits(vec![vec![0.3, -0.2, 1.0, 0.0]]).unwrap();
    let before = p.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = GrpoConfig { learning_rate: 0.0, ..Default::default() };
    for _ in 0..5 {
        grpo_step(&mut p, &before, &[0], |_, c| Ok(c as f64), &cfg, &mut rng).unwrap();
    }
    assert_eq!(p, before);
}

#[test]
fn one_good_candidate_dominates() {
    let mut p = SoftmaxPolicy::uniform(&[4]).unwrap();
    let reference = p.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let rewards = [1.0, 2.0, 1.0, 0.0];
    for _ in 0..300 {
        grpo_step(&mut p, &reference, &[0], |_, c| Ok(rewards[c]), &GrpoConfig::default(), &mut rng).unwrap();
    }
    assert!(p.probs(0)[1] > 0.95, "{:?}", p.probs(0));
}

fn shipped() -> ToyConfig {
    ToyConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/mcq_toy.toml")).unwrap()
}

#[test]
fn shipped_config_converges() {
    let cfg = shipped();
    assert_eq!(cfg.prompts.len(), 8);
    assert!(cfg.prompts.iter().all(|p| p.candidates.len() == 4));
    let report = run_toy(&cfg).unwrap();
    for rewards in &report.candidate_rewards {
        let mut sorted = rewards.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![0.0, 1.0, 1.0, 2.0]);
    }
    assert!((report.sft_losses[0] - 4f64.ln()).abs() < 1e-9);
    assert!(*report.sft_losses.last().unwrap() < 0.05);
    assert!(report.first_step_reaching(1.9).is_some_and(|s| s <= 500));
    assert!(report.final_expected_reward() >= 1.9);
}

#[test]
fn training_is_bitwise_deterministic() {
    let mut cfg = shipped();
    cfg.grpo.iterations = 60;
    let a = serde_json::to_string(&run_toy(&cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_toy(&cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    cfg.grpo.seed = 7;
    assert_ne!(a, serde_json::to_string(&run_toy(&cfg).unwrap()).unwrap());
}
