use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold-anchored piecewise-linear map of raw scores onto `[0, 1]`.
///
/// `lo -> 0`, `t -> 0.5`, `hi -> 1`, linear in between and clamped outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreMapper {
    threshold: f64,
    lo: f64,
    hi: f64,
}

impl ScoreMapper {
    pub fn new(threshold: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && threshold.is_finite()) || lo >= threshold || hi <= threshold {
            return Err(Error::DegenerateScores { lo, threshold, hi });
        }
        Ok(Self { threshold, lo, hi })
    }

    /// Uses the minimum and maximum of `scores` as the anchors.
    pub fn from_scores(scores: &[f64], threshold: f64) -> Result<Self> {
        let (lo, hi) = scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                (lo.min(s), hi.max(s))
            });
        Self::new(threshold, lo, hi)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn map(&self, m: f64) -> f64 {
        let f = if m <= self.threshold {
            0.5 * (m - self.lo) / (self.threshold - self.lo)
        } else {
            0.5 + 0.5 * (m - self.threshold) / (self.hi - self.threshold)
        };
        f.clamp(0.0, 1.0)
    }
}
