use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::TabularDataset;
use crate::error::{Error, Result};
use crate::stats::{quantile_sorted, sorted_copy};

/// Perturbation levels of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureGrid {
    /// `values[i]` is the empirical quantile at `levels[i] = i / (Q - 1)`.
    Numeric { levels: Vec<f64>, values: Vec<f64> },
    /// Observed categories in lexicographic order. `levels[i]` is the
    /// cumulative relative frequency up to and including category `i`.
    Categorical {
        codes: Vec<f64>,
        labels: Vec<String>,
        frequencies: Vec<f64>,
        levels: Vec<f64>,
    },
}

impl FeatureGrid {
    pub fn values(&self) -> &[f64] {
        match self {
            FeatureGrid::Numeric { values, .. } => values,
            FeatureGrid::Categorical { codes, .. } => codes,
        }
    }

    pub fn levels(&self) -> &[f64] {
        match self {
            FeatureGrid::Numeric { levels, .. } | FeatureGrid::Categorical { levels, .. } => levels,
        }
    }

    pub fn len(&self) -> usize {
        self.levels().len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels().is_empty()
    }

    fn quantile_of(&self, v: f64) -> Option<f64> {
        match self {
            FeatureGrid::Numeric { levels, values } => Some(interpolate_level(levels, values, v)),
            FeatureGrid::Categorical { codes, levels, .. } => {
                codes.iter().position(|&c| c == v).map(|i| levels[i])
            }
        }
    }
}

/// Inverse of the grid: piecewise-linear between grid points, clamped to
/// `[0, 1]`. On a run of equal grid values the highest level is returned.
fn interpolate_level(levels: &[f64], values: &[f64], v: f64) -> f64 {
    let above = values.partition_point(|&g| g <= v);
    if above == 0 {
        return 0.0;
    }
    if above == values.len() {
        return 1.0;
    }
    let i = above - 1;
    if v == values[i] {
        return levels[i];
    }
    let t = (v - values[i]) / (values[i + 1] - values[i]);
    (levels[i] + t * (levels[i + 1] - levels[i])).clamp(0.0, 1.0)
}

/// Per-feature quantile ladders used to build perturbations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    resolution: usize,
    names: Vec<String>,
    features: Vec<FeatureGrid>,
}

impl QuantileGrid {
    /// Builds a grid with `resolution` (Q) levels per numeric feature.
    pub fn build(data: &TabularDataset, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::invalid(format!(
                "quantile resolution must be at least 2, got {resolution}"
            )));
        }
        let levels: Vec<f64> = (0..resolution)
            .map(|i| i as f64 / (resolution - 1) as f64)
            .collect();
        let features = data
            .features()
            .iter()
            .enumerate()
            .map(|(j, spec)| {
                let column = data.column(j);
                if column.is_empty() {
                    return Err(Error::EmptyDataset(format!(
                        ": feature `{}` has no values",
                        spec.name
                    )));
                }
                if spec.is_categorical() {
                    Ok(categorical_grid(&column, &spec.categories))
                } else {
                    let sorted = sorted_copy(&column);
                    Ok(FeatureGrid::Numeric {
                        values: levels.iter().map(|&l| quantile_sorted(&sorted, l)).collect(),
                        levels: levels.clone(),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            resolution,
            names: data.feature_names(),
            features,
        })
    }

    /// Q, the number of levels per numeric feature.
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn feature(&self, j: usize) -> Result<&FeatureGrid> {
        self.features.get(j).ok_or(Error::FeatureIndex {
            index: j,
            n_features: self.features.len(),
        })
    }

    pub fn features(&self) -> &[FeatureGrid] {
        &self.features
    }

    /// Total perturbed rows for one explanation, `sum_j len(grid_j)`.
    pub fn total_rows(&self) -> usize {
        self.features.iter().map(FeatureGrid::len).sum()
    }

    /// Quantile level of `value` for feature `j`.
    pub fn quantile_of(&self, j: usize, value: f64) -> Result<f64> {
        let grid = self.feature(j)?;
        grid.quantile_of(value).ok_or_else(|| Error::UnseenCategory {
            feature: self.names[j].clone(),
            value: value.to_string(),
        })
    }

    /// `{feature: {levels: [...], values: [...]}}`, categories as labels.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (name, grid) in self.names.iter().zip(&self.features) {
            let entry = match grid {
                FeatureGrid::Numeric { levels, values } => json!({
                    "levels": levels,
                    "values": values,
                }),
                FeatureGrid::Categorical { levels, labels, .. } => json!({
                    "levels": levels,
                    "values": labels,
                }),
            };
            map.insert(name.clone(), entry);
        }
        Value::Object(map)
    }
}

fn categorical_grid(column: &[f64], dictionary: &[String]) -> FeatureGrid {
    let mut counts = vec![0usize; dictionary.len()];
    for &code in column {
        counts[code as usize] += 1;
    }
    let n = column.len() as f64;
    let mut codes = Vec::new();
    let mut labels = Vec::new();
    let mut frequencies = Vec::new();
    let mut levels = Vec::new();
    let mut seen = 0usize;
    for (code, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        seen += count;
        codes.push(code as f64);
        labels.push(dictionary[code].clone());
        frequencies.push(count as f64 / n);
        levels.push(seen as f64 / n);
    }
    FeatureGrid::Categorical {
        codes,
        labels,
        frequencies,
        levels,
    }
}
