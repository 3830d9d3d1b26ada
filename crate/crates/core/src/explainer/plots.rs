//! Data series behind the three standard views: the what-if bubble chart,
//! the single-feature waterfall and the global bar chart. Rendering is left
//! to the consumer.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{FeatureValue, GlobalExplanation, LocalExplanation, PredictedClass};
use crate::error::Result;

/// One bubble of the what-if chart. Features appear in rank order; each has
/// one bubble per perturbation plus a `baseline` bubble at the original
/// value's level and score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfPoint {
    pub rank: usize,
    pub feature: String,
    pub level: f64,
    pub value: String,
    pub mapped_score: f64,
    pub baseline: bool,
}

/// One bar of a single-feature waterfall: the change in mapped score caused
/// by moving the feature to `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterfallBar {
    pub feature: String,
    pub level: f64,
    pub value: String,
    pub mapped_score: f64,
    pub delta: f64,
    pub class: PredictedClass,
}

/// One bar of the global chart, longest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalBar {
    pub position: usize,
    pub feature: String,
    #[serde(rename = "T")]
    pub total: f64,
    pub share: f64,
}

fn display(v: &FeatureValue) -> String {
    match v {
        FeatureValue::Number(x) => x.to_string(),
        FeatureValue::Category(s) => s.clone(),
    }
}

pub fn what_if_series(e: &LocalExplanation) -> Vec<WhatIfPoint> {
    let mut out = Vec::new();
    for j in e.ranking() {
        let f = &e.features[j];
        for p in &f.perturbations {
            out.push(WhatIfPoint {
                rank: f.rank,
                feature: f.name.clone(),
                level: p.level,
                value: display(&p.value),
                mapped_score: p.mapped_score,
                baseline: false,
            });
        }
        out.push(WhatIfPoint {
            rank: f.rank,
            feature: f.name.clone(),
            level: f.baseline_level,
            value: String::new(),
            mapped_score: e.baseline_score,
            baseline: true,
        });
    }
    out
}

/// Waterfall bars for every feature, features in rank order.
pub fn waterfall_series(e: &LocalExplanation) -> Vec<WaterfallBar> {
    e.ranking()
        .into_iter()
        .flat_map(|j| {
            let f = &e.features[j];
            f.perturbations.iter().map(move |p| WaterfallBar {
                feature: f.name.clone(),
                level: p.level,
                value: display(&p.value),
                mapped_score: p.mapped_score,
                delta: p.mapped_score - e.baseline_score,
                class: PredictedClass::from_mapped(p.mapped_score),
            })
        })
        .collect()
}

pub fn global_bars(g: &GlobalExplanation) -> Vec<GlobalBar> {
    g.scores
        .iter()
        .enumerate()
        .map(|(i, s)| GlobalBar {
            position: i + 1,
            feature: s.name.clone(),
            total: s.total,
            share: s.share,
        })
        .collect()
}

/// Writes any series as CSV with a header row.
pub fn write_series<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{QuantileGrid, TabularDataset};
    use crate::explainer::{Explainer, Weights};
    use crate::model::{FnScorer, ScoreMapper};

    fn explanation() -> LocalExplanation {
        let rows = (0..=10).map(|i| vec![i as f64, (10 - i) as f64]).collect();
        let data = TabularDataset::from_rows(vec!["u".into(), "v".into()], rows).unwrap();
        let grid = QuantileGrid::build(&data, 3).unwrap();
        let scorer = FnScorer(|x: &[f64]| x[1]);
        Explainer::new(&scorer, ScoreMapper::new(5.0, 0.0, 10.0).unwrap(), &grid)
            .explain_local(&[2.0, 8.0], Weights::default())
            .unwrap()
    }

    #[test]
    fn what_if_in_rank_order_with_baseline() {
        let s = what_if_series(&explanation());
        assert_eq!(s.len(), 2 * 4);
        assert_eq!(s[0].feature, "v");
        assert!(s[3].baseline && s[3].mapped_score == 0.8);
    }

    #[test]
    fn waterfall_deltas() {
        let bars = waterfall_series(&explanation());
        assert_eq!(bars.len(), 6);
        assert!((bars[0].delta - (0.0 - 0.8)).abs() < 1e-12);
        assert_eq!(bars[0].class, PredictedClass::Normal);
        assert_eq!(bars[2].class, PredictedClass::Anomalous);
    }

    #[test]
    fn csv_has_header() {
        let mut buf = Vec::new();
        write_series(&waterfall_series(&explanation()), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("feature,level,value,mapped_score,delta,class\n"));
        assert_eq!(text.lines().count(), 7);
    }
}
