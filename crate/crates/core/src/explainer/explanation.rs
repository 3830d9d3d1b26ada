use serde::{Deserialize, Serialize};

use super::{SubScores, Weights};
use crate::error::{Error, Result};
use crate::stats::{descending_order, descending_ranks};

/// A perturbed feature value: a number, or a category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeatureValue {
    Number(f64),
    Category(String),
}

/// Class of the explained point, from its mapped score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictedClass {
    Anomalous,
    Normal,
}

impl PredictedClass {
    /// Strictly above 0.5 is anomalous.
    pub fn from_mapped(score: f64) -> Self {
        if score > 0.5 {
            PredictedClass::Anomalous
        } else {
            PredictedClass::Normal
        }
    }
}

/// One row of a feature's variable-quantile matrix and its mapped score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub level: f64,
    pub value: FeatureValue,
    pub mapped_score: f64,
}

/// Sub-scores, importance and perturbation trace of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureExplanation {
    pub name: String,
    #[serde(rename = "D")]
    pub delta: f64,
    #[serde(rename = "R")]
    pub ratio: f64,
    #[serde(rename = "C")]
    pub change: u8,
    #[serde(rename = "Q")]
    pub distance_to_change: f64,
    #[serde(rename = "I")]
    pub importance: f64,
    /// 1-based position in the importance ranking.
    pub rank: usize,
    /// Quantile level of the unperturbed value.
    pub baseline_level: f64,
    pub perturbations: Vec<Perturbation>,
}

impl FeatureExplanation {
    pub fn subscores(&self) -> SubScores {
        SubScores {
            delta: self.delta,
            ratio: self.ratio,
            change: self.change,
            distance_to_change: self.distance_to_change,
        }
    }
}

/// Explanation of a single point. Features are kept in dataset order; use
/// [`LocalExplanation::ranking`] for importance order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub baseline_score: f64,
    pub predicted_class: PredictedClass,
    pub weights: Weights,
    pub features: Vec<FeatureExplanation>,
}

/// Everything about one feature except the weight-dependent parts.
pub(crate) struct FeatureTrace {
    pub name: String,
    pub subscores: SubScores,
    pub baseline_level: f64,
    pub perturbations: Vec<Perturbation>,
}

impl LocalExplanation {
    pub(crate) fn assemble(baseline_score: f64, traces: Vec<FeatureTrace>, weights: Weights) -> Self {
        let features = traces
            .into_iter()
            .map(|t| FeatureExplanation {
                name: t.name,
                delta: t.subscores.delta,
                ratio: t.subscores.ratio,
                change: t.subscores.change,
                distance_to_change: t.subscores.distance_to_change,
                importance: 0.0,
                rank: 0,
                baseline_level: t.baseline_level,
                perturbations: t.perturbations,
            })
            .collect();
        let mut out = Self {
            baseline_score,
            predicted_class: PredictedClass::from_mapped(baseline_score),
            weights,
            features,
        };
        out.apply_weights(weights);
        out
    }

    fn apply_weights(&mut self, weights: Weights) {
        self.weights = weights;
        for f in &mut self.features {
            f.importance = f.subscores().importance(&weights);
        }
        let ranks = descending_ranks(&self.importances());
        for (f, r) in self.features.iter_mut().zip(ranks) {
            f.rank = r;
        }
    }

    /// Recomputes importance and ranking under new weights. No scorer calls
    /// are needed since sub-scores do not depend on the weights.
    pub fn reweight(&self, weights: Weights) -> Self {
        let mut out = self.clone();
        out.apply_weights(weights);
        out
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn importances(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.importance).collect()
    }

    /// Feature indices from most to least important.
    pub fn ranking(&self) -> Vec<usize> {
        descending_order(&self.importances())
    }

    pub fn ranked_names(&self) -> Vec<&str> {
        self.ranking()
            .into_iter()
            .map(|j| self.features[j].name.as_str())
            .collect()
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureExplanation> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn is_anomalous(&self) -> bool {
        self.predicted_class == PredictedClass::Anomalous
    }

    /// Total perturbation rows, which is the scorer call count minus the
    /// baseline call.
    pub fn n_perturbations(&self) -> usize {
        self.features.iter().map(|f| f.perturbations.len()).sum()
    }
}

/// Global importance of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalScore {
    pub name: String,
    #[serde(rename = "T")]
    pub total: f64,
    /// `T / sum(T)`, or 0 when every total is 0.
    pub share: f64,
}

/// Summed local importances over the predicted anomalies of a set.
/// `scores` is sorted by decreasing `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalExplanation {
    pub n_anomalies: usize,
    pub scores: Vec<GlobalScore>,
    /// Indices of the contributing rows, when known.
    #[serde(skip)]
    pub anomaly_rows: Vec<usize>,
}

impl GlobalExplanation {
    /// Sums `I` over the explanations whose baseline score is above 0.5, in
    /// the given order. `rows[i]` labels `explanations[i]`.
    pub fn from_locals(
        names: &[String],
        rows: &[usize],
        explanations: &[LocalExplanation],
    ) -> Result<Self> {
        if rows.len() != explanations.len() {
            return Err(Error::DimensionMismatch {
                expected: explanations.len(),
                found: rows.len(),
            });
        }
        let mut totals = vec![0.0; names.len()];
        let mut anomaly_rows = Vec::new();
        for (&row, e) in rows.iter().zip(explanations) {
            if e.n_features() != names.len() {
                return Err(Error::DimensionMismatch {
                    expected: names.len(),
                    found: e.n_features(),
                });
            }
            if !e.is_anomalous() {
                continue;
            }
            anomaly_rows.push(row);
            for (t, f) in totals.iter_mut().zip(&e.features) {
                *t += f.importance;
            }
        }
        Ok(Self::from_totals(names, &totals, anomaly_rows))
    }

    pub fn from_totals(names: &[String], totals: &[f64], anomaly_rows: Vec<usize>) -> Self {
        let sum: f64 = totals.iter().sum();
        let scores = descending_order(totals)
            .into_iter()
            .map(|j| GlobalScore {
                name: names[j].clone(),
                total: totals[j],
                share: if sum > 0.0 { totals[j] / sum } else { 0.0 },
            })
            .collect();
        Self {
            n_anomalies: anomaly_rows.len(),
            scores,
            anomaly_rows,
        }
    }

    pub fn total(&self, name: &str) -> Option<f64> {
        self.scores.iter().find(|s| s.name == name).map(|s| s.total)
    }

    /// Feature names from most to least important.
    pub fn ranked_names(&self) -> Vec<&str> {
        self.scores.iter().map(|s| s.name.as_str()).collect()
    }
}

/// How often each feature lands at each rank position.
/// `fractions[j][r]` is the share of explanations ranking feature `j` at
/// position `r` (0-based), so every column sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDistribution {
    pub feature_names: Vec<String>,
    pub n_explanations: usize,
    pub fractions: Vec<Vec<f64>>,
}

impl RankDistribution {
    /// Share of first places held by each feature.
    pub fn first_place_shares(&self) -> Vec<f64> {
        self.fractions.iter().map(|row| row[0]).collect()
    }

    pub fn share(&self, feature: usize, position: usize) -> f64 {
        self.fractions[feature][position]
    }

    /// Share of explanations that rank `feature` within the first `k`.
    pub fn top_k_share(&self, feature: usize, k: usize) -> f64 {
        self.fractions[feature].iter().take(k).sum()
    }
}

pub fn rank_distribution(explanations: &[LocalExplanation]) -> Result<RankDistribution> {
    let first = explanations
        .first()
        .ok_or_else(|| Error::EmptyDataset(": no explanations to aggregate".into()))?;
    let p = first.n_features();
    let mut counts = vec![vec![0usize; p]; p];
    for e in explanations {
        if e.n_features() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: e.n_features(),
            });
        }
        for (j, f) in e.features.iter().enumerate() {
            counts[j][f.rank - 1] += 1;
        }
    }
    let n = explanations.len() as f64;
    Ok(RankDistribution {
        feature_names: first.features.iter().map(|f| f.name.clone()).collect(),
        n_explanations: explanations.len(),
        fractions: counts
            .into_iter()
            .map(|row| row.into_iter().map(|c| c as f64 / n).collect())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(name: &str, d: f64, c: u8, q: f64, r: f64) -> FeatureTrace {
        FeatureTrace {
            name: name.into(),
            subscores: SubScores {
                delta: d,
                ratio: r,
                change: c,
                distance_to_change: q,
            },
            baseline_level: 0.5,
            perturbations: vec![],
        }
    }

    fn sample(baseline: f64) -> LocalExplanation {
        LocalExplanation::assemble(
            baseline,
            vec![
                trace("a", 0.1, 0, 0.0, 0.9),
                trace("b", 0.7, 1, 0.9, 0.5714),
                trace("c", 0.7, 1, 0.9, 0.5714),
            ],
            Weights::default(),
        )
    }

    #[test]
    fn ranks_break_ties_by_index() {
        let e = sample(0.8);
        assert_eq!(e.ranking(), vec![1, 2, 0]);
        assert_eq!(e.features[1].rank, 1);
        assert_eq!(e.features[2].rank, 2);
        assert!((e.features[1].importance - 0.80428).abs() < 1e-12);
    }

    #[test]
    fn reweight_reorders() {
        let e = sample(0.8).reweight(Weights::RATIO_ONLY);
        assert_eq!(e.ranking(), vec![0, 1, 2]);
        assert_eq!(e.weights, Weights::RATIO_ONLY);
    }

    #[test]
    fn global_counts_strict_anomalies_only() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let locals = vec![sample(0.8), sample(0.5), sample(0.3)];
        let g = GlobalExplanation::from_locals(&names, &[4, 5, 6], &locals).unwrap();
        assert_eq!(g.n_anomalies, 1);
        assert_eq!(g.anomaly_rows, vec![4]);
        assert_eq!(g.total("b"), Some(locals[0].features[1].importance));
        assert_eq!(g.ranked_names(), vec!["b", "c", "a"]);
        let share_sum: f64 = g.scores.iter().map(|s| s.share).sum();
        assert!((share_sum - 1.0).abs() < 1e-12);

        let none = GlobalExplanation::from_locals(&names, &[0], &locals[2..]).unwrap();
        assert!(none.scores.iter().all(|s| s.total == 0.0 && s.share == 0.0));
    }

    #[test]
    fn rank_distribution_is_indicator_for_one() {
        let e = sample(0.8);
        let d = rank_distribution(std::slice::from_ref(&e)).unwrap();
        assert_eq!(d.fractions, vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let d2 = rank_distribution(&[e.clone(), e]).unwrap();
        assert_eq!(d2.fractions, d.fractions);
        assert!(rank_distribution(&[]).is_err());
    }

    #[test]
    fn json_field_names() {
        let v = serde_json::to_value(sample(0.8)).unwrap();
        assert_eq!(v["predicted_class"], "anomalous");
        let f = &v["features"][1];
        for key in ["name", "D", "R", "C", "Q", "I", "rank", "baseline_level", "perturbations"] {
            assert!(f.get(key).is_some(), "missing {key}");
        }
        assert_eq!(f["C"], 1);
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["baseline_score", "predicted_class", "weights", "features"]);
    }
}
