//! Fixtures shared by the integration and acceptance tests.

#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, RngCore};

pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

/// Additive scorer `sum_j g_j(x_j)` with each `g_j` either a step function
/// with integer heights or a piecewise-linear ramp.
#[derive(Debug, Clone)]
pub struct Piecewise {
    breaks: Vec<Vec<f64>>,
    heights: Vec<Vec<f64>>,
    steps: bool,
}

impl Piecewise {
    pub fn random(rng: &mut impl RngCore, p: usize, lo: f64, hi: f64) -> Self {
        let steps = rng.random_bool(0.5);
        let mut breaks = Vec::with_capacity(p);
        let mut heights = Vec::with_capacity(p);
        for _ in 0..p {
            let k = rng.random_range(1..=4);
            let mut b: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
            b.sort_by(f64::total_cmp);
            let h: Vec<f64> = (0..=k)
                .map(|_| {
                    if steps {
                        f64::from(rng.random_range(0..4u8))
                    } else {
                        rng.random_range(0.0..3.0)
                    }
                })
                .collect();
            breaks.push(b);
            heights.push(h);
        }
        Self { breaks, heights, steps }
    }

    fn part(&self, j: usize, v: f64) -> f64 {
        let b = &self.breaks[j];
        let h = &self.heights[j];
        let below = b.iter().filter(|&&x| x <= v).count();
        if self.steps {
            return h[below];
        }
        if below == 0 {
            return h[0];
        }
        if below == b.len() {
            return h[b.len()];
        }
        let t = (v - b[below - 1]) / (b[below] - b[below - 1]);
        h[below - 1] + t * (h[below] - h[below - 1])
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        (0..x.len()).map(|j| self.part(j, x[j])).sum()
    }

    pub fn into_fn(self) -> impl Fn(&[f64]) -> f64 + Send + Sync + Clone {
        let s = Arc::new(self);
        move |x: &[f64]| s.score(x)
    }
}

/// A small random training set with frequent ties.
pub fn random_rows(rng: &mut impl RngCore, n: usize, p: usize) -> Vec<Vec<f64>> {
    let integer: Vec<bool> = (0..p).map(|_| rng.random_bool(0.4)).collect();
    (0..n)
        .map(|_| {
            (0..p)
                .map(|j| {
                    if integer[j] {
                        f64::from(rng.random_range(0..4u8))
                    } else {
                        rng.random_range(-3.0..3.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// Random convex weights, sometimes with zero entries.
pub fn random_weights(rng: &mut impl RngCore) -> [f64; 4] {
    let mut w: [f64; 4] = std::array::from_fn(|_| {
        if rng.random_bool(0.2) {
            0.0
        } else {
            rng.random_range(0.0..1.0)
        }
    });
    let sum: f64 = w.iter().sum();
    if sum == 0.0 {
        return [0.25; 4];
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}
