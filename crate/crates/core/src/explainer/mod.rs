//! Local and global explanations by quantile perturbation.
//!
//! For each feature `j` the explainer builds a matrix of copies of the point
//! `x` whose `j`-th entry sweeps the quantile grid, scores every row, maps the
//! scores onto `[0, 1]` and summarizes the resulting profile with four
//! sub-scores. A point costs exactly `sum_j rows(Z_j) + 1` scorer calls.

mod explanation;
pub mod plots;
mod subscores;
mod weights;

use rayon::prelude::*;

pub use explanation::{
    rank_distribution, FeatureExplanation, FeatureValue, GlobalExplanation, GlobalScore,
    LocalExplanation, Perturbation, PredictedClass, RankDistribution,
};
pub use subscores::{
    compute_change, compute_delta, compute_distance_to_change, compute_ratio, SubScores,
    TIE_TOLERANCE,
};
pub use weights::Weights;

use explanation::FeatureTrace;

use crate::dataset::{FeatureGrid, QuantileGrid, TabularDataset};
use crate::error::{Error, Result};
use crate::model::{AnomalyScorer, Detector, ScoreMapper};

/// Read-only explanation engine over a scorer, its score map and a grid.
/// Cheap to construct and safe to share across threads.
pub struct Explainer<'a, S: ?Sized> {
    scorer: &'a S,
    mapper: ScoreMapper,
    grid: &'a QuantileGrid,
}

impl<'a, S: ?Sized> Clone for Explainer<'a, S> {
    fn clone(&self) -> Self {
        Self {
            scorer: self.scorer,
            mapper: self.mapper,
            grid: self.grid,
        }
    }
}

impl<'a, S: AnomalyScorer + ?Sized> Explainer<'a, S> {
    pub fn new(scorer: &'a S, mapper: ScoreMapper, grid: &'a QuantileGrid) -> Self {
        Self {
            scorer,
            mapper,
            grid,
        }
    }

    pub fn grid(&self) -> &QuantileGrid {
        self.grid
    }

    pub fn mapper(&self) -> &ScoreMapper {
        &self.mapper
    }

    fn check_dimension(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.grid.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n_features(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Row-major matrix `Z_j`: one copy of `x` per grid level of feature `j`,
    /// with entry `j` replaced by that level's value.
    pub fn variable_quantile_matrix(&self, x: &[f64], j: usize) -> Result<Vec<f64>> {
        self.check_dimension(x)?;
        let values = self.grid.feature(j)?.values();
        let p = x.len();
        let mut z = Vec::with_capacity(values.len() * p);
        for (k, &v) in values.iter().enumerate() {
            z.extend_from_slice(x);
            z[k * p + j] = v;
        }
        Ok(z)
    }

    /// Mapped score `f(x)` of one point.
    pub fn mapped_score(&self, x: &[f64]) -> Result<f64> {
        self.check_dimension(x)?;
        let m = self.scorer.score(x).map_err(|source| Error::Scorer {
            context: "baseline".into(),
            source,
        })?;
        Ok(self.mapper.map(m))
    }

    pub fn explain_local(&self, x: &[f64], weights: Weights) -> Result<LocalExplanation> {
        let baseline = self.mapped_score(x)?;
        let p = x.len();
        let mut traces = Vec::with_capacity(p);
        for j in 0..p {
            let name = &self.grid.names()[j];
            let z = self.variable_quantile_matrix(x, j)?;
            let scores: Vec<f64> = self
                .scorer
                .score_batch(&z, p)
                .map_err(|source| Error::Scorer {
                    context: format!("feature `{name}`"),
                    source,
                })?
                .into_iter()
                .map(|m| self.mapper.map(m))
                .collect();
            let feature = self.grid.feature(j)?;
            let levels = feature.levels();
            let baseline_level = self.grid.quantile_of(j, x[j])?;
            let subscores = SubScores::compute(levels, &scores, baseline, baseline_level);
            let perturbations = levels
                .iter()
                .zip(&scores)
                .enumerate()
                .map(|(i, (&level, &mapped_score))| Perturbation {
                    level,
                    value: grid_value(feature, i),
                    mapped_score,
                })
                .collect();
            traces.push(FeatureTrace {
                name: name.clone(),
                subscores,
                baseline_level,
                perturbations,
            });
        }
        Ok(LocalExplanation::assemble(baseline, traces, weights))
    }

    /// Explains the given rows of `data` in parallel, preserving order.
    pub fn explain_rows(
        &self,
        data: &TabularDataset,
        rows: &[usize],
        weights: Weights,
    ) -> Result<Vec<LocalExplanation>> {
        rows.par_iter()
            .map(|&i| {
                if i >= data.n_rows() {
                    return Err(Error::RowIndex {
                        index: i,
                        n_rows: data.n_rows(),
                    });
                }
                self.explain_local(data.row(i), weights)
                    .map_err(|e| with_row_context(e, i))
            })
            .collect()
    }

    /// Rows of `data` whose mapped score is strictly above 0.5.
    pub fn predicted_anomalies(&self, data: &TabularDataset) -> Result<Vec<usize>> {
        let scores = self
            .scorer
            .score_batch(data.as_flat(), data.n_features())
            .map_err(|source| Error::Scorer {
                context: "baseline".into(),
                source,
            })?;
        Ok(scores
            .into_iter()
            .enumerate()
            .filter(|&(_, m)| self.mapper.map(m) > 0.5)
            .map(|(i, _)| i)
            .collect())
    }

    /// Local explanations of every predicted anomaly in `data`, with their
    /// row indices.
    pub fn explain_anomalies(
        &self,
        data: &TabularDataset,
        weights: Weights,
    ) -> Result<(Vec<usize>, Vec<LocalExplanation>)> {
        let rows = self.predicted_anomalies(data)?;
        let explanations = self.explain_rows(data, &rows, weights)?;
        Ok((rows, explanations))
    }

    /// Global importance: local importances summed over the predicted
    /// anomalies of `data`. Normal rows only cost their baseline call.
    pub fn explain_global(&self, data: &TabularDataset, weights: Weights) -> Result<GlobalExplanation> {
        let (rows, explanations) = self.explain_anomalies(data, weights)?;
        GlobalExplanation::from_locals(self.grid.names(), &rows, &explanations)
    }
}

impl<'a, S: AnomalyScorer> Explainer<'a, S> {
    pub fn from_detector(detector: &'a Detector<S>, grid: &'a QuantileGrid) -> Self {
        Self::new(detector.scorer(), *detector.mapper(), grid)
    }
}

fn grid_value(feature: &FeatureGrid, i: usize) -> FeatureValue {
    match feature {
        FeatureGrid::Numeric { values, .. } => FeatureValue::Number(values[i]),
        FeatureGrid::Categorical { labels, .. } => FeatureValue::Category(labels[i].clone()),
    }
}

fn with_row_context(e: Error, row: usize) -> Error {
    match e {
        Error::Scorer { context, source } => Error::Scorer {
            context: format!("row {row}, {context}"),
            source,
        },
        other => other,
    }
}
