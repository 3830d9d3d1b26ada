use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

const SUM_TOLERANCE: f64 = 1e-9;

/// Convex weights of the four sub-scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct Weights {
    delta: f64,
    change: f64,
    distance: f64,
    ratio: f64,
}

#[derive(Serialize, Deserialize)]
struct RawWeights {
    #[serde(rename = "w_D")]
    delta: f64,
    #[serde(rename = "w_C")]
    change: f64,
    #[serde(rename = "w_Q")]
    distance: f64,
    #[serde(rename = "w_R")]
    ratio: f64,
}

impl TryFrom<RawWeights> for Weights {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self, Error> {
        Weights::new(raw.delta, raw.change, raw.distance, raw.ratio)
    }
}

impl From<Weights> for RawWeights {
    fn from(w: Weights) -> Self {
        RawWeights {
            delta: w.delta,
            change: w.change,
            distance: w.distance,
            ratio: w.ratio,
        }
    }
}

impl Default for Weights {
    /// `w_D = 0.3, w_C = 0.3, w_Q = 0.2, w_R = 0.2`.
    fn default() -> Self {
        Self {
            delta: 0.3,
            change: 0.3,
            distance: 0.2,
            ratio: 0.2,
        }
    }
}

impl Weights {
    /// Argument order is `(w_D, w_C, w_Q, w_R)`.
    pub fn new(delta: f64, change: f64, distance: f64, ratio: f64) -> Result<Self, Error> {
        let all = [delta, change, distance, ratio];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and non-negative, got {all:?}"
            )));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self {
            delta,
            change,
            distance,
            ratio,
        })
    }

    /// Rescales non-negative weights to sum to one.
    pub fn normalized(delta: f64, change: f64, distance: f64, ratio: f64) -> Result<Self, Error> {
        let sum = delta + change + distance + ratio;
        if sum.is_nan() || sum <= 0.0 {
            return Err(Error::InvalidWeights("weights sum to zero".into()));
        }
        Self::new(delta / sum, change / sum, distance / sum, ratio / sum)
    }

    pub const DELTA_ONLY: Weights = Weights { delta: 1.0, change: 0.0, distance: 0.0, ratio: 0.0 };
    pub const CHANGE_ONLY: Weights = Weights { delta: 0.0, change: 1.0, distance: 0.0, ratio: 0.0 };
    pub const DISTANCE_ONLY: Weights = Weights { delta: 0.0, change: 0.0, distance: 1.0, ratio: 0.0 };
    pub const RATIO_ONLY: Weights = Weights { delta: 0.0, change: 0.0, distance: 0.0, ratio: 1.0 };

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn change(&self) -> f64 {
        self.change
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

/// Parses `wD,wC,wQ,wR`.
impl FromStr for Weights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::InvalidWeights(format!("`{s}`: {e}")))?;
        match parts[..] {
            [d, c, q, r] => Weights::new(d, c, q, r),
            _ => Err(Error::InvalidWeights(format!(
                "expected four comma-separated values (wD,wC,wQ,wR), got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.delta, self.change, self.distance, self.ratio)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let w = Weights::default();
        assert_eq!((w.delta(), w.change(), w.distance(), w.ratio()), (0.3, 0.3, 0.2, 0.2));
    }

    #[test]
    fn parse_and_validate() {
        assert_eq!("0.3,0.3,0.2,0.2".parse::<Weights>().unwrap(), Weights::default());
        assert!("0.3,0.3,0.2,0.1".parse::<Weights>().is_err());
        assert!("1,0,0".parse::<Weights>().is_err());
        assert!("1.5,-0.5,0,0".parse::<Weights>().is_err());
        assert!("a,b,c,d".parse::<Weights>().is_err());
    }

    #[test]
    fn normalization() {
        let w = Weights::normalized(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(w, Weights::new(0.25, 0.25, 0.25, 0.25).unwrap());
        assert!(Weights::normalized(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn json_shape() {
        let json = serde_json::to_value(Weights::default()).unwrap();
        assert_eq!(json, serde_json::json!({"w_D": 0.3, "w_C": 0.3, "w_Q": 0.2, "w_R": 0.2}));
        let bad: Result<Weights, _> =
            serde_json::from_value(serde_json::json!({"w_D": 0.3, "w_C": 0.3, "w_Q": 0.2, "w_R": 0.1}));
        assert!(bad.is_err());
    }
}
