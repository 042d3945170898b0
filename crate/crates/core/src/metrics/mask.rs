use serde::{Deserialize, Serialize};

use super::MetricError;

/// Row-major binary mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

/// Wire form: `{"size": [h, w], "rle": [zeros, ones, zeros, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub size: [usize; 2],
    pub rle: Vec<usize>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self, MetricError> {
        if height == 0 || width == 0 {
            return Err(MetricError::InvalidMask("dimensions must be positive".into()));
        }
        if bits.len() != height * width {
            return Err(MetricError::InvalidMask(format!("expected {} cells, got {}", height * width, bits.len())));
        }
        Ok(Self { height, width, bits })
    }

    pub fn empty(height: usize, width: usize) -> Result<Self, MetricError> {
        Self::new(height, width, vec![false; height * width])
    }

    /// Decode row-major run lengths that start with a run of zeros. Runs
    /// shorter than the grid leave the remaining cells unset.
    pub fn from_rle(height: usize, width: usize, runs: &[usize]) -> Result<Self, MetricError> {
        let total: usize = runs.iter().sum();
        if total > height * width {
            return Err(MetricError::InvalidMask(format!(
                "run lengths cover {total} cells but the mask has {}",
                height * width
            )));
        }
        let mut bits = Vec::with_capacity(height * width);
        for (i, &run) in runs.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, run));
        }
        bits.resize(height * width, false);
        Self::new(height, width, bits)
    }

    pub fn to_rle(&self) -> RleMask {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0usize;
        for &b in &self.bits {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        RleMask { size: [self.height, self.width], rle: runs }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.height == other.height && self.width == other.width
    }
}

impl TryFrom<RleMask> for BinaryMask {
    type Error = MetricError;

    fn try_from(m: RleMask) -> Result<Self, Self::Error> {
        BinaryMask::from_rle(m.size[0], m.size[1], &m.rle)
    }
}

impl Serialize for BinaryMask {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_rle().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BinaryMask {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rle = RleMask::deserialize(deserializer)?;
        BinaryMask::try_from(rle).map_err(serde::de::Error::custom)
    }
}

/// Dice overlap `2|X∩Y| / (|X| + |Y|)`; two empty masks score 1.0.
pub fn dice(x: &BinaryMask, y: &BinaryMask) -> Result<f64, MetricError> {
    if !x.same_shape(y) {
        return Err(MetricError::DimensionMismatch(x.height, x.width, y.height, y.width));
    }
    let (mut inter, mut nx, mut ny) = (0usize, 0usize, 0usize);
    for (&a, &b) in x.bits.iter().zip(&y.bits) {
        nx += usize::from(a);
        ny += usize::from(b);
        inter += usize::from(a && b);
    }
    if nx + ny == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (nx + ny) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(h: usize, w: usize, rows_set: std::ops::Range<usize>) -> BinaryMask {
        let mut m = BinaryMask::empty(h, w).unwrap();
        for r in rows_set {
            for c in 0..w {
                m.set(r, c, true);
            }
        }
        m
    }

    #[test]
    fn identical_masks() {
        let m = rows(10, 10, 2..5);
        assert_eq!(dice(&m, &m).unwrap(), 1.0);
    }

    #[test]
    fn half_overlap() {
        // |X| = |Y| = 100, |X ∩ Y| = 50
        let x = rows(20, 10, 0..10);
        let y = rows(20, 10, 5..15);
        assert_eq!(dice(&x, &y).unwrap(), 0.5);
    }

    #[test]
    fn both_empty() {
        let e = BinaryMask::empty(4, 4).unwrap();
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        assert_eq!(dice(&e, &rows(4, 4, 0..1)).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let a = BinaryMask::empty(4, 4).unwrap();
        let b = BinaryMask::empty(4, 5).unwrap();
        assert!(matches!(dice(&a, &b), Err(MetricError::DimensionMismatch(4, 4, 4, 5))));
    }

    #[test]
    fn rle_decoding() {
        let m = BinaryMask::from_rle(2, 3, &[1, 2, 1, 1]).unwrap();
        assert_eq!(m.bits(), &[false, true, true, false, true, false]);
        assert_eq!(m.to_rle().rle, vec![1, 2, 1, 1, 1]);
        assert!(BinaryMask::from_rle(2, 3, &[4, 4]).is_err());
        let starts_set = BinaryMask::from_rle(1, 3, &[0, 3]).unwrap();
        assert_eq!(starts_set.count(), 3);
        assert_eq!(BinaryMask::try_from(starts_set.to_rle()).unwrap(), starts_set);
    }

    #[test]
    fn json_wire_shape() {
        let m: BinaryMask = serde_json::from_str(r#"{"size":[2,2],"rle":[1,2]}"#).unwrap();
        assert_eq!(m.bits(), &[false, true, true, false]);
        assert!(serde_json::from_str::<BinaryMask>(r#"{"size":[0,2],"rle":[]}"#).is_err());
    }
}
