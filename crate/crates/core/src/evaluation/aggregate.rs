use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainer::GlobalExplanation;
use crate::stats::descending_order;

/// Rank-based consensus over several model instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedRank {
    pub feature_names: Vec<String>,
    /// Accumulated `1 - ln(rank) / ln(p)` per feature (`S_agg`).
    pub scores: Vec<f64>,
    pub n_instances: usize,
    /// Per-instance 1-based rank of every feature, in feature order.
    pub instance_ranks: Vec<Vec<usize>>,
}

impl AggregatedRank {
    /// Feature indices by descending aggregated score, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        descending_order(&self.scores)
    }

    pub fn top_k(&self, k: usize) -> Vec<usize> {
        self.ranking().into_iter().take(k).collect()
    }

    pub fn ranked_names(&self) -> Vec<&str> {
        self.ranking()
            .into_iter()
            .map(|j| self.feature_names[j].as_str())
            .collect()
    }
}

/// Contribution of a feature at 1-based `rank` among `p`.
pub fn rank_contribution(rank: usize, p: usize) -> f64 {
    1.0 - (rank as f64).ln() / (p as f64).ln()
}

/// Combines global explanations from several model instances. Only each
/// instance's ordering of `T` enters the result.
pub fn aggregate_rankings(names: &[String], globals: &[GlobalExplanation]) -> Result<AggregatedRank> {
    let p = names.len();
    if p < 2 {
        return Err(Error::invalid("rank aggregation needs at least 2 features"));
    }
    if globals.is_empty() {
        return Err(Error::invalid("rank aggregation needs at least one instance"));
    }
    let mut scores = vec![0.0; p];
    let mut instance_ranks = Vec::with_capacity(globals.len());
    for g in globals {
        if g.scores.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: g.scores.len(),
            });
        }
        let mut ranks = vec![0; p];
        for (pos, s) in g.scores.iter().enumerate() {
            let j = names
                .iter()
                .position(|n| *n == s.name)
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown feature `{}`", s.name)))?;
            ranks[j] = pos + 1;
        }
        if ranks.contains(&0) {
            return Err(Error::SchemaMismatch("duplicate feature in global scores".into()));
        }
        for (acc, &r) in scores.iter_mut().zip(&ranks) {
            *acc += rank_contribution(r, p);
        }
        instance_ranks.push(ranks);
    }
    Ok(AggregatedRank {
        feature_names: names.to_vec(),
        scores,
        n_instances: globals.len(),
        instance_ranks,
    })
}
