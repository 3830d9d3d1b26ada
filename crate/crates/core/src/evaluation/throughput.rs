use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{QuantileGrid, TabularDataset};
use crate::error::{Error, Result};
use crate::explainer::{Explainer, Weights};
use crate::model::{AnomalyScorer, CountingScorer, ScoreMapper};
use crate::stats::{linear_fit, LinearFit};

/// Timing and call count for one prefix of the row set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputPoint {
    pub fraction: f64,
    pub n_rows: usize,
    pub scorer_calls: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub points: Vec<ThroughputPoint>,
    /// Scorer calls for a single explanation.
    pub calls_per_row: u64,
    /// Seconds against explained rows.
    pub fit: Option<LinearFit>,
}

/// Explains growing prefixes of `rows` on the calling thread, recording wall
/// time and exact scorer calls. Prefix length is `round(fraction * len)`.
pub fn throughput_benchmark<S: AnomalyScorer + ?Sized>(
    scorer: &S,
    mapper: ScoreMapper,
    grid: &QuantileGrid,
    data: &TabularDataset,
    rows: &[usize],
    fractions: &[f64],
    weights: Weights,
) -> Result<ThroughputReport> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset(": no rows to explain".into()));
    }
    if let Some(&i) = rows.iter().find(|&&i| i >= data.n_rows()) {
        return Err(Error::RowIndex {
            index: i,
            n_rows: data.n_rows(),
        });
    }
    if fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::invalid("fractions must lie in (0, 1]"));
    }
    let counting = CountingScorer::new(scorer);
    let explainer = Explainer::new(&counting, mapper, grid);

    explainer.explain_local(data.row(rows[0]), weights)?;
    let calls_per_row = counting.calls();

    let mut points = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let n = ((fraction * rows.len() as f64).round() as usize).max(1);
        counting.reset();
        let start = Instant::now();
        for &i in &rows[..n] {
            explainer.explain_local(data.row(i), weights)?;
        }
        let seconds = start.elapsed().as_secs_f64();
        points.push(ThroughputPoint {
            fraction,
            n_rows: n,
            scorer_calls: counting.calls(),
            seconds,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n_rows as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds).collect();
    Ok(ThroughputReport {
        fit: linear_fit(&xs, &ys),
        points,
        calls_per_row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FnScorer;

    #[test]
    fn calls_scale_with_rows() {
        let rows = (0..50).map(|i| vec![i as f64, (i % 7) as f64, (i % 3) as f64]).collect();
        let data = TabularDataset::from_rows(vec!["a".into(), "b".into(), "c".into()], rows).unwrap();
        let grid = QuantileGrid::build(&data, 8).unwrap();
        let scorer = FnScorer(|x: &[f64]| x[0] + x[1]);
        let mapper = ScoreMapper::new(30.0, 0.0, 60.0).unwrap();
        let all: Vec<usize> = (0..50).collect();
        let r = throughput_benchmark(&scorer, mapper, &grid, &data, &all, &[0.2, 1.0], Weights::default())
            .unwrap();
        assert_eq!(r.calls_per_row, 3 * 8 + 1);
        assert_eq!(r.points[0].scorer_calls * 5, r.points[1].scorer_calls);
        assert!(throughput_benchmark(&scorer, mapper, &grid, &data, &[], &[1.0], Weights::default()).is_err());
    }
}
