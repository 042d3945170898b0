use serde::{Deserialize, Serialize};

use crate::bbox::BoundingBox;
use crate::metrics::BinaryMask;

/// Pixel dimensions of the image a response refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    #[serde(rename = "h")]
    pub height: usize,
    #[serde(rename = "w")]
    pub width: usize,
}

impl ImageDims {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub fn is_valid(&self) -> bool {
        self.height > 0 && self.width > 0
    }
}

/// Turns box prompts into a mask over the image. Implementations must return
/// a mask of exactly `image` dimensions, all-false for an empty prompt set,
/// and must be callable concurrently.
pub trait PromptableSegmenter: Send + Sync {
    fn segment(&self, image: ImageDims, boxes: &[BoundingBox]) -> BinaryMask;
}

/// Deterministic stand-in segmenter: the union of the prompt boxes,
/// rasterised as every pixel whose centre lies inside a box, clipped to the
/// image bounds.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoxFillSegmenter;

impl PromptableSegmenter for BoxFillSegmenter {
    fn segment(&self, image: ImageDims, boxes: &[BoundingBox]) -> BinaryMask {
        let mut bits = vec![false; image.height * image.width];
        for b in boxes {
            let Some((c0, c1)) = covered_cells(b.x_min(), b.x_max(), image.width) else {
                continue;
            };
            let Some((r0, r1)) = covered_cells(b.y_min(), b.y_max(), image.height) else {
                continue;
            };
            for row in r0..r1 {
                bits[row * image.width + c0..row * image.width + c1].fill(true);
            }
        }
        BinaryMask::new(image.height, image.width, bits).expect("image dims are validated by the scorer")
    }
}

/// Half-open cell range `[first, last)` whose centres `i + 0.5` fall in
/// `[lo, hi)`, clipped to `0..limit`.
fn covered_cells(lo: f64, hi: f64, limit: usize) -> Option<(usize, usize)> {
    let first = (lo - 0.5).ceil().max(0.0);
    let last = (hi - 0.5).ceil().max(0.0).min(limit as f64);
    (first < last).then_some((first as usize, last as usize))
}
