//! Isolation Forest: random axis-parallel partitioning, scored by the
//! normalized expected isolation depth `s(x) = 2^(-E[h(x)] / c(psi))`.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnomalyScorer;
use crate::dataset::TabularDataset;
use crate::error::{Error, Result, ScoreError};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Average path length of an unsuccessful BST search over `n` points.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolationForestParams {
    pub n_trees: usize,
    /// Subsample size per tree (psi).
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for IsolationForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            sample_size: 256,
            seed: 0,
        }
    }
}

impl IsolationForestParams {
    pub fn new(n_trees: usize, sample_size: usize, seed: u64) -> Self {
        Self {
            n_trees,
            sample_size,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.sample_size < 2 {
            return Err(Error::invalid(format!(
                "sample size (psi) must be at least 2, got {}",
                self.sample_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "t", rename_all = "lowercase")]
enum Node {
    Split {
        feature: u32,
        value: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        size: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IsolationTree {
    nodes: Vec<Node>,
}

impl IsolationTree {
    fn grow(data: &TabularDataset, sample: &mut [usize], height_limit: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut tree = Self { nodes: Vec::new() };
        tree.grow_node(data, sample, 0, height_limit, rng);
        tree
    }

    fn grow_node(
        &mut self,
        data: &TabularDataset,
        rows: &mut [usize],
        depth: usize,
        height_limit: usize,
        rng: &mut ChaCha8Rng,
    ) -> u32 {
        let id = self.nodes.len() as u32;
        if depth >= height_limit || rows.len() <= 1 {
            self.nodes.push(Node::Leaf {
                size: rows.len() as u32,
            });
            return id;
        }

        // Only features with a non-empty range at this node can split it.
        let p = data.n_features();
        let mut ranges = Vec::with_capacity(p);
        for j in 0..p {
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                let v = data.row(r)[j];
                (lo.min(v), hi.max(v))
            });
            if lo < hi {
                ranges.push((j, lo, hi));
            }
        }
        if ranges.is_empty() {
            self.nodes.push(Node::Leaf {
                size: rows.len() as u32,
            });
            return id;
        }

        let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        let value = rng.random_range(lo..hi);
        // Points with x <= value go left; value < hi keeps both sides non-empty.
        let mut split = 0;
        for i in 0..rows.len() {
            if data.row(rows[i])[feature] <= value {
                rows.swap(i, split);
                split += 1;
            }
        }

        self.nodes.push(Node::Leaf { size: 0 });
        let (left_rows, right_rows) = rows.split_at_mut(split);
        let left = self.grow_node(data, left_rows, depth + 1, height_limit, rng);
        let right = self.grow_node(data, right_rows, depth + 1, height_limit, rng);
        self.nodes[id as usize] = Node::Split {
            feature: feature as u32,
            value,
            left,
            right,
        };
        id
    }

    fn path_length(&self, x: &[f64]) -> f64 {
        let mut node = 0usize;
        let mut depth = 0.0;
        loop {
            match self.nodes[node] {
                Node::Split {
                    feature,
                    value,
                    left,
                    right,
                } => {
                    node = if x[feature as usize] <= value {
                        left as usize
                    } else {
                        right as usize
                    };
                    depth += 1.0;
                }
                Node::Leaf { size } => return depth + average_path_length(size as usize),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    params: IsolationForestParams,
    n_features: usize,
    /// `min(psi, N)`, the subsample size actually used.
    effective_sample_size: usize,
    /// `c(psi)` normalizer.
    normalizer: f64,
    trees: Vec<IsolationTree>,
}

impl IsolationForest {
    /// Trains a forest. Trees are grown in parallel from per-tree seeds drawn
    /// from `params.seed`, so the result does not depend on thread count.
    pub fn fit(data: &TabularDataset, params: IsolationForestParams) -> Result<Self> {
        params.validate()?;
        if let Some(f) = data.features().iter().find(|f| f.is_categorical()) {
            return Err(Error::CategoricalInput(f.name.clone()));
        }
        let n = data.n_rows();
        let psi = params.sample_size.min(n);
        let height_limit = (psi as f64).log2().ceil() as usize;

        let mut master = ChaCha8Rng::seed_from_u64(params.seed);
        let seeds: Vec<u64> = (0..params.n_trees).map(|_| master.next_u64()).collect();
        let trees = seeds
            .into_par_iter()
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut sample = index::sample(&mut rng, n, psi).into_vec();
                IsolationTree::grow(data, &mut sample, height_limit, &mut rng)
            })
            .collect();

        Ok(Self {
            params,
            n_features: data.n_features(),
            effective_sample_size: psi,
            normalizer: average_path_length(psi),
            trees,
        })
    }

    pub fn params(&self) -> &IsolationForestParams {
        &self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean path length `E[h(x)]` over trees.
    pub fn expected_path_length(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64
    }

    fn raw_score(&self, x: &[f64]) -> f64 {
        if self.normalizer == 0.0 {
            // psi == 1: every point isolates immediately.
            return 0.5;
        }
        (2.0f64).powf(-self.expected_path_length(x) / self.normalizer)
    }
}

impl AnomalyScorer for IsolationForest {
    fn score(&self, x: &[f64]) -> Result<f64, ScoreError> {
        if x.len() != self.n_features {
            return Err(ScoreError::new(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(self.raw_score(x))
    }

    fn score_batch(&self, rows: &[f64], n_features: usize) -> Result<Vec<f64>, ScoreError> {
        if n_features != self.n_features {
            return Err(ScoreError::new(format!(
                "expected {} features, got {n_features}",
                self.n_features
            )));
        }
        Ok(rows.chunks_exact(n_features).map(|r| self.raw_score(r)).collect())
    }
}
