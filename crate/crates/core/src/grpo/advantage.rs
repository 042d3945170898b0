use serde::{Deserialize, Serialize};

use super::GrpoError;

/// Which standard deviation normalises group rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdKind {
    /// Divide by `G`.
    #[default]
    Population,
    /// Divide by `G - 1`.
    Sample,
}

/// `A_g = (r_g - mean) / std` with the population standard deviation.
/// A group whose std is below `std_floor` gets all-zero advantages.
pub fn compute_advantages(rewards: &[f64], std_floor: f64) -> Result<Vec<f64>, GrpoError> {
    compute_advantages_with(rewards, std_floor, StdKind::Population)
}

pub fn compute_advantages_with(rewards: &[f64], std_floor: f64, kind: StdKind) -> Result<Vec<f64>, GrpoError> {
    let g = rewards.len();
    if g < 2 {
        return Err(GrpoError::GroupTooSmall(g));
    }
    let mean = rewards.iter().sum::<f64>() / g as f64;
    let ss: f64 = rewards.iter().map(|r| (r - mean).powi(2)).sum();
    let dof = match kind {
        StdKind::Population => g,
        StdKind::Sample => g - 1,
    };
    let std = (ss / dof as f64).sqrt();
    if std.is_nan() || std < std_floor {
        return Ok(vec![0.0; g]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}
