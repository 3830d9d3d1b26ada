use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::f1_score;
use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::model::{Detector, IsolationForest, IsolationForestParams, ThresholdRule};
use crate::stats::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Models trained per `k` and per arm.
    pub retrains: usize,
    pub n_trees: usize,
    pub sample_size: usize,
    pub threshold: ThresholdRule,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            retrains: 50,
            n_trees: 100,
            sample_size: 256,
            threshold: ThresholdRule::default(),
            seed: 0,
        }
    }
}

/// Guided and random results for one subset size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPoint {
    pub k: usize,
    /// The top-`k` features of the guiding ranking.
    pub features: Vec<String>,
    pub guided_median_f1: f64,
    pub random_median_f1: f64,
    pub guided_f1: Vec<f64>,
    pub random_f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelectionCurve {
    pub retrains: usize,
    pub points: Vec<SelectionPoint>,
}

impl FeatureSelectionCurve {
    /// Subset sizes at which the guided median is at least the random one.
    pub fn guided_wins(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.guided_median_f1 >= p.random_median_f1)
            .count()
    }

    /// `k` with the highest guided median F1 (smallest on ties).
    pub fn best_k(&self) -> Option<usize> {
        self.points
            .iter()
            .fold(None, |best: Option<&SelectionPoint>, p| match best {
                Some(b) if b.guided_median_f1 >= p.guided_median_f1 => Some(b),
                _ => Some(p),
            })
            .map(|p| p.k)
    }
}

fn train_and_score(
    data: &TabularDataset,
    columns: &[usize],
    cfg: &SelectionConfig,
    seed: u64,
) -> Result<f64> {
    let labels = data.labels().ok_or(Error::MissingLabels)?;
    let subset = data.select_features(columns)?;
    let params = IsolationForestParams::new(cfg.n_trees, cfg.sample_size, seed);
    let forest = IsolationForest::fit(&subset, params)?;
    let detector = Detector::calibrate(forest, &subset, cfg.threshold)?;
    Ok(f1_score(&detector.predict(&subset)?, labels)?.f1)
}

/// Retrains on the top-`k` prefix of `ranking` for every `k` and compares
/// against uniformly random `k`-subsets drawn afresh for each retrain.
///
/// Retrain `r` uses the same forest seed in both arms and for every `k`, and
/// columns are kept in dataset order, so at `k = p` the two arms coincide.
pub fn feature_selection_sweep(
    data: &TabularDataset,
    ranking: &[usize],
    cfg: &SelectionConfig,
) -> Result<FeatureSelectionCurve> {
    if data.labels().is_none() {
        return Err(Error::MissingLabels);
    }
    let p = data.n_features();
    let mut sorted = ranking.to_vec();
    sorted.sort_unstable();
    if sorted != (0..p).collect::<Vec<_>>() {
        return Err(Error::invalid("ranking must be a permutation of all features"));
    }
    if cfg.retrains == 0 {
        return Err(Error::invalid("retrains must be at least 1"));
    }

    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<u64> = (0..cfg.retrains).map(|_| master.next_u64()).collect();
    let names = data.feature_names();

    let mut points = Vec::with_capacity(p);
    for k in 1..=p {
        let mut guided: Vec<usize> = ranking[..k].to_vec();
        guided.sort_unstable();

        let mut subset_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        subset_rng.set_stream(k as u64);
        let random_sets: Vec<Vec<usize>> = (0..cfg.retrains)
            .map(|_| {
                let mut s = index::sample(&mut subset_rng, p, k).into_vec();
                s.sort_unstable();
                s
            })
            .collect();

        let guided_f1 = seeds
            .par_iter()
            .map(|&s| train_and_score(data, &guided, cfg, s))
            .collect::<Result<Vec<f64>>>()?;
        let random_f1 = seeds
            .par_iter()
            .zip(&random_sets)
            .map(|(&s, cols)| train_and_score(data, cols, cfg, s))
            .collect::<Result<Vec<f64>>>()?;

        points.push(SelectionPoint {
            k,
            features: ranking[..k].iter().map(|&j| names[j].clone()).collect(),
            guided_median_f1: median(&guided_f1),
            random_median_f1: median(&random_f1),
            guided_f1,
            random_f1,
        });
    }
    Ok(FeatureSelectionCurve {
        retrains: cfg.retrains,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> TabularDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..120 {
            let t = i as f64;
            let out = i % 12 == 0;
            let signal = if out { 10.0 + t * 0.01 } else { (t * 0.37).sin() };
            rows.push(vec![(t * 1.7).cos(), signal, (t * 0.91).sin()]);
            labels.push(out);
        }
        TabularDataset::from_rows(vec!["a".into(), "b".into(), "c".into()], rows)
            .unwrap()
            .with_labels(labels)
            .unwrap()
    }

    fn cfg() -> SelectionConfig {
        SelectionConfig {
            retrains: 5,
            n_trees: 30,
            sample_size: 64,
            threshold: ThresholdRule::Contamination(1.0 / 12.0),
            seed: 3,
        }
    }

    #[test]
    fn full_subset_arms_coincide() {
        let curve = feature_selection_sweep(&toy(), &[1, 0, 2], &cfg()).unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!(last.guided_f1, last.random_f1);
        assert_eq!(curve.points[0].features, vec!["b"]);
        assert_eq!(curve.points[1].features, vec!["b", "a"]);
    }

    #[test]
    fn relevant_feature_beats_random() {
        let curve = feature_selection_sweep(&toy(), &[1, 0, 2], &cfg()).unwrap();
        assert!(curve.points[0].guided_median_f1 >= curve.points[0].random_median_f1);
        assert!(curve.guided_wins() >= 2);
    }

    #[test]
    fn deterministic() {
        let a = feature_selection_sweep(&toy(), &[1, 0, 2], &cfg()).unwrap();
        let b = feature_selection_sweep(&toy(), &[1, 0, 2], &cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(feature_selection_sweep(&toy(), &[0, 1], &cfg()).is_err());
        let unlabelled = TabularDataset::from_rows(vec!["a".into()], vec![vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(
            feature_selection_sweep(&unlabelled, &[0], &cfg()),
            Err(Error::MissingLabels)
        ));
    }
}
