//! Anomaly scorers, decision thresholds and the score-to-`[0, 1]` map.

mod forest;
mod mapper;
mod persist;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

pub use forest::{average_path_length, IsolationForest, IsolationForestParams};
pub use mapper::ScoreMapper;
pub use persist::SavedModel;

use crate::dataset::TabularDataset;
use crate::error::{Error, Result, ScoreError};
use crate::stats::{quantile_sorted, sorted_copy};

/// Anything that assigns a real-valued outlyingness score to a point.
/// Higher scores are more anomalous.
///
/// Implementations must be deterministic and safe to call from many threads.
pub trait AnomalyScorer: Send + Sync {
    fn score(&self, x: &[f64]) -> Result<f64, ScoreError>;

    /// Scores `rows.len() / n_features` row-major points.
    fn score_batch(&self, rows: &[f64], n_features: usize) -> Result<Vec<f64>, ScoreError> {
        rows.chunks_exact(n_features).map(|r| self.score(r)).collect()
    }
}

impl<S: AnomalyScorer + ?Sized> AnomalyScorer for &S {
    fn score(&self, x: &[f64]) -> Result<f64, ScoreError> {
        (**self).score(x)
    }

    fn score_batch(&self, rows: &[f64], n_features: usize) -> Result<Vec<f64>, ScoreError> {
        (**self).score_batch(rows, n_features)
    }
}

impl<S: AnomalyScorer + ?Sized> AnomalyScorer for Box<S> {
    fn score(&self, x: &[f64]) -> Result<f64, ScoreError> {
        (**self).score(x)
    }

    fn score_batch(&self, rows: &[f64], n_features: usize) -> Result<Vec<f64>, ScoreError> {
        (**self).score_batch(rows, n_features)
    }
}

impl<S: AnomalyScorer + ?Sized> AnomalyScorer for std::sync::Arc<S> {
    fn score(&self, x: &[f64]) -> Result<f64, ScoreError> {
        (**self).score(x)
    }

    fn score_batch(&self, rows: &[f64], n_features: usize) -> Result<Vec<f64>, ScoreError> {
        (**self).score_batch(rows, n_features)
    }
}

/// Wraps a scorer and counts evaluated points.
#[derive(Debug)]
pub struct CountingScorer<S> {
    inner: S,
    calls: AtomicU64,
}

impl<S> CountingScorer<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: AnomalyScorer> AnomalyScorer for CountingScorer<S> {
    fn score(&self, x: &[f64]) -> Result<f64, ScoreError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.score(x)
    }

    fn score_batch(&self, rows: &[f64], n_features: usize) -> Result<Vec<f64>, ScoreError> {
        self.calls
            .fetch_add((rows.len() / n_features) as u64, Ordering::Relaxed);
        self.inner.score_batch(rows, n_features)
    }
}

/// Adapts a closure into a scorer.
pub struct FnScorer<F>(pub F);

impl<F> AnomalyScorer for FnScorer<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn score(&self, x: &[f64]) -> Result<f64, ScoreError> {
        Ok((self.0)(x))
    }
}

/// How the decision threshold `t` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `t` is the empirical `(1 - c)`-quantile of the training scores.
    Contamination(f64),
    /// Hard-coded `t`.
    Fixed(f64),
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::Contamination(0.10)
    }
}

impl ThresholdRule {
    pub fn resolve(&self, training_scores: &[f64]) -> Result<f64> {
        match *self {
            ThresholdRule::Contamination(c) => select_threshold(training_scores, c),
            ThresholdRule::Fixed(t) if t.is_finite() => Ok(t),
            ThresholdRule::Fixed(t) => Err(Error::invalid(format!("threshold {t} is not finite"))),
        }
    }
}

/// Empirical `(1 - contamination)`-quantile of `scores`.
pub fn select_threshold(scores: &[f64], contamination: f64) -> Result<f64> {
    if !(contamination > 0.0 && contamination < 1.0) {
        return Err(Error::invalid(format!(
            "contamination must lie in (0, 1), got {contamination}"
        )));
    }
    if scores.is_empty() {
        return Err(Error::EmptyDataset(": no scores to threshold".into()));
    }
    Ok(quantile_sorted(&sorted_copy(scores), 1.0 - contamination))
}

pub fn score_dataset<S: AnomalyScorer + ?Sized>(
    scorer: &S,
    data: &TabularDataset,
) -> Result<Vec<f64>> {
    scorer
        .score_batch(data.as_flat(), data.n_features())
        .map_err(|source| Error::Scorer {
            context: String::new(),
            source,
        })
}

/// A scorer together with its threshold and score map: the full decision
/// function `m(x) > t` plus `f(m(x))`.
#[derive(Debug, Clone)]
pub struct Detector<S> {
    scorer: S,
    mapper: ScoreMapper,
}

impl<S: AnomalyScorer> Detector<S> {
    pub fn new(scorer: S, mapper: ScoreMapper) -> Self {
        Self { scorer, mapper }
    }

    /// Scores `training` once, picks `t` with `rule` and anchors the map at
    /// the observed minimum and maximum score.
    pub fn calibrate(scorer: S, training: &TabularDataset, rule: ThresholdRule) -> Result<Self> {
        let scores = score_dataset(&scorer, training)?;
        let threshold = rule.resolve(&scores)?;
        let mapper = ScoreMapper::from_scores(&scores, threshold)?;
        Ok(Self { scorer, mapper })
    }

    pub fn scorer(&self) -> &S {
        &self.scorer
    }

    pub fn mapper(&self) -> &ScoreMapper {
        &self.mapper
    }

    pub fn threshold(&self) -> f64 {
        self.mapper.threshold()
    }

    pub fn into_parts(self) -> (S, ScoreMapper) {
        (self.scorer, self.mapper)
    }

    /// `m(x) > t` for every row.
    pub fn predict(&self, data: &TabularDataset) -> Result<Vec<bool>> {
        let t = self.threshold();
        Ok(score_dataset(&self.scorer, data)?
            .into_iter()
            .map(|m| m > t)
            .collect())
    }

    pub fn mapped_scores(&self, data: &TabularDataset) -> Result<Vec<f64>> {
        Ok(score_dataset(&self.scorer, data)?
            .into_iter()
            .map(|m| self.mapper.map(m))
            .collect())
    }
}
