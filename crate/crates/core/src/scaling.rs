//! Token-budgeted, patch-aligned resize planning.
//!
//! An `H×W` image is scaled by a single factor
//! `s = min(1, sqrt(M·P² / (H·W)))` and each side is floored to a multiple of
//! the patch size `P` (never below one patch). If the budget `M` is still
//! exceeded, the larger side loses one patch at a time.
//!
//! Flooring is done in exact integer arithmetic: when `s < 1` the number of
//! patches along the height is `floor(H·s / P) = floor(sqrt(M·H / W))`, which
//! is the largest `k` with `k²·W ≤ M·H`.

use serde::{Deserialize, Serialize};

/// Token budget for region-of-interest images.
pub const ROI_MAX_TOKENS: u64 = 256;
/// Token budget for whole-slide images.
pub const WSI_MAX_TOKENS: u64 = 1024;
/// Vision patch side in pixels.
pub const DEFAULT_PATCH: u64 = 28;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalingError {
    #[error("{name} must be at least 1")]
    NonPositive { name: &'static str },
    #[error("{height}x{width} is not aligned to patch size {patch}")]
    Unaligned { height: u64, width: u64, patch: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResizePlan {
    pub input_height: u64,
    pub input_width: u64,
    pub output_height: u64,
    pub output_width: u64,
    pub patch: u64,
    pub max_tokens: u64,
    pub tokens: u64,
}

impl ResizePlan {
    pub fn output_area(&self) -> u64 {
        self.output_height * self.output_width
    }
}

/// Number of `P×P` patches in an aligned `H'×W'` image.
pub fn token_count(height: u64, width: u64, patch: u64) -> Result<u64, ScalingError> {
    if patch == 0 {
        return Err(ScalingError::NonPositive { name: "patch" });
    }
    if height == 0 || width == 0 || !height.is_multiple_of(patch) || !width.is_multiple_of(patch) {
        return Err(ScalingError::Unaligned { height, width, patch });
    }
    Ok((height / patch) * (width / patch))
}

pub fn plan_resize(height: u64, width: u64, max_tokens: u64, patch: u64) -> Result<ResizePlan, ScalingError> {
    for (name, v) in [("height", height), ("width", width), ("max_tokens", max_tokens), ("patch", patch)] {
        if v == 0 {
            return Err(ScalingError::NonPositive { name });
        }
    }
    let (h, w, m, p) = (height as u128, width as u128, max_tokens as u128, patch as u128);

    let downscale = (p * p).checked_mul(m).is_some_and(|budget_area| budget_area < h * w);
    let (mut rows, mut cols) = if downscale { (isqrt_ratio(m * h, w), isqrt_ratio(m * w, h)) } else { (h / p, w / p) };
    rows = rows.max(1);
    cols = cols.max(1);

    (rows, cols) = shrink_to_budget(rows, cols, m);

    Ok(ResizePlan {
        input_height: height,
        input_width: width,
        output_height: (rows * p) as u64,
        output_width: (cols * p) as u64,
        patch,
        max_tokens,
        tokens: (rows * cols) as u64,
    })
}

/// Remove one patch at a time from the larger side (rows on a tie) until
/// `rows · cols ≤ budget`. Runs of identical steps are taken in one jump.
fn shrink_to_budget(mut rows: u128, mut cols: u128, budget: u128) -> (u128, u128) {
    while rows * cols > budget {
        if rows >= cols {
            let fit = budget / cols;
            rows = if fit >= cols { fit } else { cols - 1 };
        } else {
            let fit = budget / rows;
            cols = if fit >= rows { fit } else { rows };
        }
    }
    (rows, cols)
}

/// Largest `k` with `k² · den ≤ num`.
fn isqrt_ratio(num: u128, den: u128) -> u128 {
    let target = num / den;
    let mut k = (target as f64).sqrt() as u128;
    let fits = |k: u128| k.checked_mul(k).and_then(|sq| sq.checked_mul(den)).is_some_and(|v| v <= num);
    while k > 0 && !fits(k) {
        k -= 1;
    }
    while fits(k + 1) {
        k += 1;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_roi_and_wsi() {
        let roi = plan_resize(1000, 1000, 256, 28).unwrap();
        assert_eq!((roi.output_height, roi.output_width, roi.tokens), (448, 448, 256));
        let wsi = plan_resize(1000, 1000, 1024, 28).unwrap();
        assert_eq!((wsi.output_height, wsi.output_width, wsi.tokens), (896, 896, 1024));
    }

    #[test]
    fn aligned_input_unchanged() {
        let p = plan_resize(448, 448, 256, 28).unwrap();
        assert_eq!((p.output_height, p.output_width, p.tokens), (448, 448, 256));
    }

    #[test]
    fn small_inputs_floor_to_one_patch() {
        let p = plan_resize(10, 5, 256, 28).unwrap();
        assert_eq!((p.output_height, p.output_width, p.tokens), (28, 28, 1));
    }

    #[test]
    fn extreme_aspect_uses_shrink_loop() {
        let p = plan_resize(1, 1_000_000, 16, 28).unwrap();
        assert_eq!(p.output_height, 28);
        assert!(p.tokens <= 16);
        assert_eq!(p.output_width, 16 * 28);
    }

    #[test]
    fn huge_inputs_do_not_overflow() {
        let p = plan_resize(u64::MAX, u64::MAX, u64::MAX, u64::MAX).unwrap();
        assert_eq!(p.tokens, 1);
        let p = plan_resize(u64::MAX, 3, 1024, 28).unwrap();
        assert!(p.tokens <= 1024);
    }

    #[test]
    fn token_counts() {
        assert_eq!(token_count(448, 448, 28).unwrap(), 256);
        assert_eq!(token_count(28, 28, 28).unwrap(), 1);
        assert_eq!(token_count(896, 896, 28).unwrap(), 1024);
        assert!(matches!(token_count(450, 448, 28), Err(ScalingError::Unaligned { .. })));
        assert!(token_count(0, 28, 28).is_err());
    }

    #[test]
    fn rejects_zero_inputs() {
        assert_eq!(plan_resize(0, 10, 256, 28), Err(ScalingError::NonPositive { name: "height" }));
        assert!(plan_resize(10, 10, 0, 28).is_err());
        assert!(plan_resize(10, 10, 10, 0).is_err());
    }

    fn shrink_one_at_a_time(mut rows: u128, mut cols: u128, budget: u128) -> (u128, u128) {
        while rows * cols > budget {
            if rows >= cols {
                rows -= 1;
            } else {
                cols -= 1;
            }
        }
        (rows, cols)
    }

    #[test]
    fn shrink_jump_matches_single_steps() {
        for rows in 1..60 {
            for cols in 1..60 {
                for budget in [1, 2, 3, 7, 16, 50, 256, 1000] {
                    assert_eq!(
                        shrink_to_budget(rows, cols, budget),
                        shrink_one_at_a_time(rows, cols, budget),
                        "{rows} {cols} {budget}"
                    );
                }
            }
        }
    }

    #[test]
    fn isqrt_ratio_exact() {
        assert_eq!(isqrt_ratio(256, 1), 16);
        assert_eq!(isqrt_ratio(255, 1), 15);
        assert_eq!(isqrt_ratio(256 * 3, 3), 16);
        assert_eq!(isqrt_ratio(1, 2), 0);
        assert_eq!(isqrt_ratio(u64::MAX as u128 * u64::MAX as u128, 1), u64::MAX as u128);
    }
}
