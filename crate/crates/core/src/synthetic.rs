//! The ring benchmark: inliers inside a disc of radius 3 in the first two
//! coordinates, outliers in an annulus of radii 4 to 30, and standard normal
//! noise in every remaining coordinate.
//!
//! ```
//! use acme_ad::synthetic::{generate_training, SyntheticSpec};
//!
//! let train = generate_training(&SyntheticSpec::default()).unwrap();
//! assert_eq!(train.n_rows(), 1000);
//! assert_eq!(train.labels().unwrap().iter().filter(|&&l| l).count(), 100);
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};

/// Name of the meta column holding the outlier family of test rows.
pub const FAMILY_COLUMN: &str = "family";

const TRAIN_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Total dimension `p`, at least 2.
    pub n_features: usize,
    pub n_train: usize,
    pub contamination: f64,
    pub n_axis_x: usize,
    pub n_axis_y: usize,
    pub n_bisec: usize,
    pub inlier_radius: (f64, f64),
    pub outlier_radius: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_features: 6,
            n_train: 1000,
            contamination: 0.10,
            n_axis_x: 100,
            n_axis_y: 100,
            n_bisec: 100,
            inlier_radius: (0.0, 3.0),
            outlier_radius: (4.0, 30.0),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features < 2 {
            return Err(Error::invalid("the ring benchmark needs at least 2 features"));
        }
        if !(0.0..=1.0).contains(&self.contamination) {
            return Err(Error::invalid(format!(
                "contamination must lie in [0, 1], got {}",
                self.contamination
            )));
        }
        let (a, b) = self.inlier_radius;
        let (c, d) = self.outlier_radius;
        if !(0.0 <= a && a < b && c < d) || [a, b, c, d].iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("radius ranges must be finite and non-empty"));
        }
        if b > c && d > a {
            return Err(Error::invalid("inlier and outlier radius ranges overlap"));
        }
        Ok(())
    }

    /// Training outliers: `N * c` rounded to the nearest integer.
    pub fn n_train_outliers(&self) -> usize {
        (self.n_train as f64 * self.contamination).round() as usize
    }

    pub fn feature_names(&self) -> Vec<String> {
        (0..self.n_features).map(|j| format!("x{j}")).collect()
    }
}

/// Direction along which a test outlier is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutlierFamily {
    #[serde(rename = "x-axis")]
    XAxis,
    #[serde(rename = "y-axis")]
    YAxis,
    #[serde(rename = "bisec")]
    Bisec,
}

impl OutlierFamily {
    pub const ALL: [OutlierFamily; 3] = [OutlierFamily::XAxis, OutlierFamily::YAxis, OutlierFamily::Bisec];

    pub fn as_str(&self) -> &'static str {
        match self {
            OutlierFamily::XAxis => "x-axis",
            OutlierFamily::YAxis => "y-axis",
            OutlierFamily::Bisec => "bisec",
        }
    }

    /// Features that carry the anomaly.
    pub fn relevant_features(&self) -> &'static [usize] {
        match self {
            OutlierFamily::XAxis => &[0],
            OutlierFamily::YAxis => &[1],
            OutlierFamily::Bisec => &[0, 1],
        }
    }

    /// First two coordinates for radius `rho` and sign `s`.
    fn place(&self, rho: f64, s: f64) -> (f64, f64) {
        match self {
            OutlierFamily::XAxis => (s * rho, 0.0),
            OutlierFamily::YAxis => (0.0, s * rho),
            OutlierFamily::Bisec => {
                let v = s * rho * FRAC_1_SQRT_2;
                (v, v)
            }
        }
    }
}

impl fmt::Display for OutlierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutlierFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OutlierFamily::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown outlier family `{s}`")))
    }
}

fn noise(rng: &mut ChaCha8Rng, row: &mut Vec<f64>, n: usize) {
    row.extend((0..n).map(|_| -> f64 { StandardNormal.sample(rng) }));
}

fn ring_point(rng: &mut ChaCha8Rng, radius: &Uniform<f64>, angle: &Uniform<f64>, p: usize) -> Vec<f64> {
    let rho = radius.sample(rng);
    let theta = angle.sample(rng);
    let mut row = Vec::with_capacity(p);
    row.push(rho * theta.cos());
    row.push(rho * theta.sin());
    noise(rng, &mut row, p - 2);
    row
}

fn uniform(lo: f64, hi: f64) -> Result<Uniform<f64>> {
    Uniform::new(lo, hi).map_err(|e| Error::invalid(e.to_string()))
}

/// Labelled training set: inliers first, then `N * c` outliers.
pub fn generate_training(spec: &SyntheticSpec) -> Result<TabularDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(TRAIN_STREAM);
    let n_out = spec.n_train_outliers();
    let n_in = spec.n_train - n_out;
    let angle = uniform(0.0, TAU)?;
    let inner = uniform(spec.inlier_radius.0, spec.inlier_radius.1)?;
    let outer = uniform(spec.outlier_radius.0, spec.outlier_radius.1)?;
    let p = spec.n_features;

    let mut rows = Vec::with_capacity(spec.n_train);
    for _ in 0..n_in {
        rows.push(ring_point(&mut rng, &inner, &angle, p));
    }
    for _ in 0..n_out {
        rows.push(ring_point(&mut rng, &outer, &angle, p));
    }
    let labels = (0..spec.n_train).map(|i| i >= n_in).collect();
    TabularDataset::from_rows(spec.feature_names(), rows)?.with_labels(labels)
}

/// The three test-outlier families, in order, with a `family` meta column.
/// Every row is labelled anomalous.
pub fn generate_test_outliers(spec: &SyntheticSpec) -> Result<TabularDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(TEST_STREAM);
    let outer = uniform(spec.outlier_radius.0, spec.outlier_radius.1)?;
    let p = spec.n_features;
    let counts = [spec.n_axis_x, spec.n_axis_y, spec.n_bisec];

    let mut rows = Vec::new();
    let mut families = Vec::new();
    for (family, &count) in OutlierFamily::ALL.iter().zip(&counts) {
        for _ in 0..count {
            let rho = outer.sample(&mut rng);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let (a, b) = family.place(rho, sign);
            let mut row = Vec::with_capacity(p);
            row.push(a);
            row.push(b);
            noise(&mut rng, &mut row, p - 2);
            rows.push(row);
            families.push(family.as_str().to_string());
        }
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::EmptyDataset(": no test outliers requested".into()));
    }
    TabularDataset::from_rows(spec.feature_names(), rows)?
        .with_labels(vec![true; n])?
        .with_meta(FAMILY_COLUMN, families)
}

/// Row indices of `data` whose family column equals `family`.
pub fn rows_of_family(data: &TabularDataset, family: OutlierFamily) -> Vec<usize> {
    data.meta(FAMILY_COLUMN)
        .map(|col| {
            col.iter()
                .enumerate()
                .filter(|(_, f)| f.as_str() == family.as_str())
                .map(|(i, _)| i)
                .collect()
        })
        .unwrap_or_default()
}
