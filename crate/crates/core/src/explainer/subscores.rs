//! The four per-feature sub-scores and their convex combination.
//!
//! Every function takes the mapped scores `f(z)` of one feature's
//! perturbations, already on the `[0, 1]` scale where `0.5` is the threshold.

use serde::{Deserialize, Serialize};

use super::Weights;

/// Level distances closer than this count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Sub-scores of one feature for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubScores {
    /// Spread of the perturbed scores (`D`).
    #[serde(rename = "D")]
    pub delta: f64,
    /// Relative position of the baseline inside that spread (`R`).
    #[serde(rename = "R")]
    pub ratio: f64,
    /// 1 if some perturbation crosses the threshold (`C`).
    #[serde(rename = "C")]
    pub change: u8,
    /// Closeness in quantile space of the nearest class-flipping level (`Q`).
    #[serde(rename = "Q")]
    pub distance_to_change: f64,
}

impl SubScores {
    /// Computes all four sub-scores from one feature's perturbation results.
    ///
    /// `scores[i]` is the mapped score at `levels[i]`, `baseline` is `f(x)`
    /// and `baseline_level` is the quantile level of the unperturbed value.
    pub fn compute(levels: &[f64], scores: &[f64], baseline: f64, baseline_level: f64) -> Self {
        let change = compute_change(scores);
        Self {
            delta: compute_delta(scores),
            ratio: compute_ratio(scores, baseline),
            change: u8::from(change),
            distance_to_change: compute_distance_to_change(levels, scores, baseline, baseline_level, change),
        }
    }

    /// `I = w_D D + w_C C + w_Q Q + w_R R`, evaluated left to right.
    ///
    /// The sum is clamped to the sub-scores' own range, which only removes
    /// rounding drift since the weights sum to one.
    pub fn importance(&self, w: &Weights) -> f64 {
        let parts = [self.delta, f64::from(self.change), self.distance_to_change, self.ratio];
        let (lo, hi) = min_max(&parts);
        let sum = w.delta() * parts[0] + w.change() * parts[1] + w.distance() * parts[2] + w.ratio() * parts[3];
        sum.clamp(lo, hi)
    }
}

fn min_max(scores: &[f64]) -> (f64, f64) {
    scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)))
}

/// `max - min` of the perturbed scores; 0 when there are none.
pub fn compute_delta(scores: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let (lo, hi) = min_max(scores);
    hi - lo
}

/// `(f(x) - min) / (max - min)`, clamped to `[0, 1]`; 0 for a flat profile.
pub fn compute_ratio(scores: &[f64], baseline: f64) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let (lo, hi) = min_max(scores);
    let spread = hi - lo;
    if spread <= 0.0 {
        return 0.0;
    }
    ((baseline - lo) / spread).clamp(0.0, 1.0)
}

/// True when the perturbations straddle the threshold:
/// `max >= 0.5` and `min < 0.5`.
pub fn compute_change(scores: &[f64]) -> bool {
    if scores.is_empty() {
        return false;
    }
    let (lo, hi) = min_max(scores);
    hi >= 0.5 && lo < 0.5
}

/// `1 - |level - baseline_level|` for the nearest perturbation whose class
/// differs from the baseline's.
///
/// A baseline below 0.5 flips on scores above 0.5 and vice versa; a baseline
/// exactly at 0.5 flips in either direction. Equidistant candidates resolve
/// to the lower level. Returns 0 when `change` is false or nothing flips.
pub fn compute_distance_to_change(
    levels: &[f64],
    scores: &[f64],
    baseline: f64,
    baseline_level: f64,
    change: bool,
) -> f64 {
    if !change {
        return 0.0;
    }
    let candidates: Vec<(f64, f64)> = levels
        .iter()
        .zip(scores)
        .filter(|&(_, &s)| (baseline <= 0.5 && s > 0.5) || (baseline >= 0.5 && s < 0.5))
        .map(|(&level, _)| (level, (level - baseline_level).abs()))
        .collect();
    let Some(nearest) = candidates.iter().map(|c| c.1).reduce(f64::min) else {
        return 0.0;
    };
    let (_, d) = candidates
        .iter()
        .filter(|c| c.1 - nearest <= TIE_TOLERANCE)
        .fold((f64::INFINITY, 0.0), |best, &c| if c.0 < best.0 { c } else { best });
    (1.0 - d).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_and_ratio() {
        let s = [0.2, 0.6, 0.4];
        assert!((compute_delta(&s) - 0.4).abs() < 1e-15);
        assert!((compute_ratio(&s, 0.3) - 0.25).abs() < 1e-15);
        assert_eq!(compute_ratio(&s, 0.9), 1.0);
        assert_eq!(compute_ratio(&[0.3, 0.3], 0.3), 0.0);
    }

    #[test]
    fn change_is_half_open() {
        assert!(compute_change(&[0.49, 0.5]));
        assert!(!compute_change(&[0.5, 0.7]));
        assert!(!compute_change(&[0.1, 0.49]));
    }

    #[test]
    fn distance_tie_goes_to_lower_level() {
        let levels = [0.3, 0.5, 0.7];
        let scores = [0.8, 0.2, 0.8];
        let q = compute_distance_to_change(&levels, &scores, 0.2, 0.5, true);
        assert!((q - 0.8).abs() < 1e-12);
    }

    #[test]
    fn distance_respects_direction() {
        let levels = [0.0, 0.5, 1.0];
        // Anomalous baseline: only scores below 0.5 count.
        let scores = [0.9, 0.3, 0.9];
        assert_eq!(compute_distance_to_change(&levels, &scores, 0.9, 1.0, true), 0.5);
        // Nothing flips for a normal baseline below all these.
        assert_eq!(compute_distance_to_change(&levels, &[0.1, 0.2, 0.3], 0.2, 0.0, true), 0.0);
        assert_eq!(compute_distance_to_change(&levels, &scores, 0.9, 1.0, false), 0.0);
    }

    #[test]
    fn baseline_on_threshold_flips_both_ways() {
        let levels = [0.0, 1.0];
        assert_eq!(compute_distance_to_change(&levels, &[0.4, 0.5], 0.5, 0.75, true), 0.25);
        assert_eq!(compute_distance_to_change(&levels, &[0.5, 0.6], 0.5, 0.75, true), 0.75);
    }

    #[test]
    fn importance_weights() {
        let s = SubScores { delta: 0.5, ratio: 1.0, change: 1, distance_to_change: 0.25 };
        let i = s.importance(&Weights::default());
        assert!((i - (0.15 + 0.3 + 0.05 + 0.2)).abs() < 1e-12);
        assert_eq!(s.importance(&Weights::CHANGE_ONLY), 1.0);
    }
}
