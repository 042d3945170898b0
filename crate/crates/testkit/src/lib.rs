//! Slow, obviously-correct reference implementations used only by tests.
//!
//! Nothing here depends on the library crates: inputs are plain arrays so the
//! oracles cannot accidentally share code with what they check.

pub mod gen;

pub type Box4 = [f64; 4];

/// IoU by counting unit cells of integer-coordinate boxes.
pub fn iou_raster(a: Box4, b: Box4) -> f64 {
    let cells = |bx: Box4| -> Vec<(i64, i64)> {
        let mut v = Vec::new();
        for y in bx[1] as i64..bx[3] as i64 {
            for x in bx[0] as i64..bx[2] as i64 {
                v.push((x, y));
            }
        }
        v
    };
    let ca = cells(a);
    let cb = cells(b);
    let inter = ca.iter().filter(|c| cb.contains(c)).count();
    let union = ca.len() + cb.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Real-valued IoU from explicit overlap intervals.
pub fn iou_exact(a: Box4, b: Box4) -> f64 {
    let ow = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let oh = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = ow * oh;
    if inter == 0.0 {
        return 0.0;
    }
    let area = |x: Box4| (x[2] - x[0]) * (x[3] - x[1]);
    inter / (area(a) + area(b) - inter)
}

fn lex_less(a: Box4, b: Box4) -> bool {
    for i in 0..4 {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    false
}

/// Greedy matching in prediction order; best IoU wins, equal IoUs go to the
/// lexicographically smaller ground-truth box.
pub fn match_greedy(preds: &[Box4], gts: &[Box4], threshold: f64) -> Vec<bool> {
    let mut used = vec![false; gts.len()];
    let mut out = Vec::new();
    for &p in preds {
        let mut best: Option<(usize, f64)> = None;
        for (j, &g) in gts.iter().enumerate() {
            if used[j] {
                continue;
            }
            let v = iou_exact(p, g);
            best = match best {
                None => Some((j, v)),
                Some((bj, bv)) => {
                    if v > bv || (v == bv && lex_less(g, gts[bj])) {
                        Some((j, v))
                    } else {
                        Some((bj, bv))
                    }
                }
            };
        }
        match best {
            Some((j, v)) if v >= threshold => {
                used[j] = true;
                out.push(true);
            }
            _ => out.push(false),
        }
    }
    out
}

/// All-point interpolated AP by enumerating every prefix of the ranked list:
/// each true positive adds `1/|gts|` recall at the best precision achieved at
/// that rank or any later rank.
pub fn average_precision_enum(flags: &[bool], num_gts: usize) -> f64 {
    if num_gts == 0 {
        return if flags.is_empty() { 1.0 } else { 0.0 };
    }
    let precision_at = |k: usize| -> f64 {
        let tp = flags[..=k].iter().filter(|&&f| f).count();
        tp as f64 / (k + 1) as f64
    };
    let mut ap = 0.0;
    for i in 0..flags.len() {
        if !flags[i] {
            continue;
        }
        let mut best = 0.0f64;
        for k in i..flags.len() {
            best = best.max(precision_at(k));
        }
        ap += best / num_gts as f64;
    }
    ap
}

pub fn average_precision_oracle(preds: &[Box4], gts: &[Box4], threshold: f64) -> f64 {
    average_precision_enum(&match_greedy(preds, gts, threshold), gts.len())
}

/// Dice by pixel counting.
pub fn dice_count(x: &[bool], y: &[bool]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mut inter = 0usize;
    let mut sx = 0usize;
    let mut sy = 0usize;
    for i in 0..x.len() {
        if x[i] {
            sx += 1;
        }
        if y[i] {
            sy += 1;
        }
        if x[i] && y[i] {
            inter += 1;
        }
    }
    if sx + sy == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (sx + sy) as f64
    }
}

/// Occurrences of `gram` in `tokens`, by scanning every window.
fn count_gram(tokens: &[String], gram: &[String]) -> usize {
    if gram.len() > tokens.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len()).filter(|&i| &tokens[i..i + gram.len()] == gram).count()
}

/// Sentence BLEU-4 over pre-tokenised input with uniform weights, clipped
/// counts, no smoothing.
pub fn bleu4_oracle(cand: &[String], reference: &[String]) -> f64 {
    let c = cand.len();
    let r = reference.len();
    let mut log_sum = 0.0;
    for n in 1..=4 {
        if c < n {
            return 0.0;
        }
        let mut seen: Vec<&[String]> = Vec::new();
        let mut clipped = 0usize;
        for i in 0..=c - n {
            let g = &cand[i..i + n];
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            clipped += count_gram(cand, g).min(count_gram(reference, g));
        }
        let total = c - n + 1;
        if clipped == 0 {
            return 0.0;
        }
        log_sum += (clipped as f64 / total as f64).ln();
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    bp * (log_sum / 4.0).exp()
}

/// Resize by linear search: the largest patch count per side that the
/// scaled side still covers, then trim patches from the larger side one at a
/// time until the budget holds. Returns `(out_h, out_w)`.
pub fn resize_search(h: u64, w: u64, max_tokens: u64, patch: u64) -> (u64, u64) {
    let (hh, ww, m, p) = (h as u128, w as u128, max_tokens as u128, patch as u128);
    let (mut rows, mut cols);
    if hh * ww <= m * p * p {
        rows = hh / p;
        cols = ww / p;
    } else {
        // k·P ≤ H·sqrt(M·P²/(H·W))  ⇔  k²·W ≤ M·H
        rows = 0;
        while (rows + 1) * (rows + 1) * ww <= m * hh {
            rows += 1;
        }
        cols = 0;
        while (cols + 1) * (cols + 1) * hh <= m * ww {
            cols += 1;
        }
    }
    rows = rows.max(1);
    cols = cols.max(1);
    while rows * cols > m {
        if rows >= cols {
            rows -= 1;
        } else {
            cols -= 1;
        }
    }
    ((rows * p) as u64, (cols * p) as u64)
}

/// Two-sided signed-rank p-value by enumerating all `2^n` sign assignments.
/// Zero differences must already be removed.
pub fn wilcoxon_enum(diffs: &[f64]) -> f64 {
    let n = diffs.len();
    assert!(n <= 20, "enumeration is exponential");
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|&a| {
            let below = abs.iter().filter(|&&b| b < a).count() as f64;
            let equal = abs.iter().filter(|&&b| b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| ranks[i]).sum();
    let mut le = 0u64;
    let mut ge = 0u64;
    for mask in 0u64..(1u64 << n) {
        let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * le.min(ge) as f64 / total).min(1.0)
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_diff<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let up = f(&xp);
            xp[i] = x[i] - h;
            let down = f(&xp);
            xp[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Max relative error between two gradients, with an absolute floor so
/// near-zero components are compared absolutely.
pub fn max_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor)).fold(0.0, f64::max)
}

/// Group objective evaluated term by term from ratios:
/// `ratio = π_new/π_old`, `ref_ratio = π_ref/π_new`.
pub fn grpo_objective_scalar(ratio: &[f64], adv: &[f64], ref_ratio: &[f64], eps: f64, beta: f64) -> f64 {
    let g = ratio.len() as f64;
    let mut total = 0.0;
    for i in 0..ratio.len() {
        let clipped = if ratio[i] < 1.0 - eps {
            1.0 - eps
        } else if ratio[i] > 1.0 + eps {
            1.0 + eps
        } else {
            ratio[i]
        };
        let a = ratio[i] * adv[i];
        let b = clipped * adv[i];
        let surrogate = if a < b { a } else { b };
        let kl = ref_ratio[i] - ref_ratio[i].ln() - 1.0;
        total += surrogate - beta * kl;
    }
    total / g
}

/// Two-pass mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
