//! Column-typed tabular data and the quantile grids built from it.
//!
//! Every cell is stored as an `f64`. Categorical columns hold the index of the
//! category in the column's dictionary, and dictionaries are kept in
//! lexicographic order so that codes, perturbation order and pseudo-quantiles
//! all agree.

mod csv_io;
mod grid;

use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, read_csv, write_csv, CsvOptions, LoadReport};
pub use grid::{FeatureGrid, QuantileGrid};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Name, kind and (for categoricals) the sorted category dictionary of a feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl FeatureSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            categories: Vec::new(),
        }
    }

    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        let mut categories = categories;
        categories.sort();
        categories.dedup();
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories,
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == ColumnKind::Categorical
    }

    /// Code of `label` in this feature's dictionary.
    pub fn encode(&self, label: &str) -> Option<f64> {
        self.categories
            .binary_search_by(|c| c.as_str().cmp(label))
            .ok()
            .map(|i| i as f64)
    }

    /// Label for a category code; `None` for numeric features or bad codes.
    pub fn decode(&self, code: f64) -> Option<&str> {
        if !self.is_categorical() || code < 0.0 || code.fract() != 0.0 {
            return None;
        }
        self.categories.get(code as usize).map(String::as_str)
    }
}

/// Extra per-row string column carried alongside the features (e.g. a class id).
#[derive(Debug, Clone, PartialEq)]
pub struct MetaColumn {
    pub name: String,
    pub values: Vec<String>,
}

/// An `N x p` table of feature values with optional binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    features: Vec<FeatureSpec>,
    values: Vec<f64>,
    labels: Option<Vec<bool>>,
    meta: Vec<MetaColumn>,
}

impl TabularDataset {
    /// Builds an all-numeric dataset from row vectors.
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let features = names.into_iter().map(FeatureSpec::numeric).collect();
        Self::new(features, rows)
    }

    pub fn new(features: Vec<FeatureSpec>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = features.len();
        if p == 0 {
            return Err(Error::EmptyDataset(": no feature columns".into()));
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset(String::new()));
        }
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                check_cell(&features[j], v).map_err(|m| Error::Parse {
                    line: i as u64 + 1,
                    column: features[j].name.clone(),
                    message: m,
                })?;
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            features,
            values,
            labels: None,
            meta: Vec::new(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_meta(mut self, name: impl Into<String>, values: Vec<String>) -> Result<Self> {
        if values.len() != self.n_rows() {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows(),
                found: values.len(),
            });
        }
        self.meta.push(MetaColumn {
            name: name.into(),
            values,
        });
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.values.len() / self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_features();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_features())
    }

    /// Row-major backing storage.
    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn meta(&self, name: &str) -> Option<&[String]> {
        self.meta
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.values.as_slice())
    }

    pub fn meta_columns(&self) -> &[MetaColumn] {
        &self.meta
    }

    pub fn has_categorical(&self) -> bool {
        self.features.iter().any(FeatureSpec::is_categorical)
    }

    /// New dataset keeping only the listed feature columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Self> {
        let p = self.n_features();
        if columns.is_empty() {
            return Err(Error::invalid("feature selection must keep at least one column"));
        }
        if let Some(&bad) = columns.iter().find(|&&c| c >= p) {
            return Err(Error::FeatureIndex {
                index: bad,
                n_features: p,
            });
        }
        let features = columns.iter().map(|&c| self.features[c].clone()).collect();
        let values = self
            .rows()
            .flat_map(|r| columns.iter().map(move |&c| r[c]))
            .collect();
        Ok(Self {
            features,
            values,
            labels: self.labels.clone(),
            meta: self.meta.clone(),
        })
    }

    /// New dataset with the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let n = self.n_rows();
        if rows.is_empty() {
            return Err(Error::EmptyDataset(": row selection is empty".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::RowIndex {
                index: bad,
                n_rows: n,
            });
        }
        let values = rows.iter().flat_map(|&r| self.row(r).iter().copied()).collect();
        let labels = self
            .labels
            .as_ref()
            .map(|l| rows.iter().map(|&r| l[r]).collect());
        let meta = self
            .meta
            .iter()
            .map(|m| MetaColumn {
                name: m.name.clone(),
                values: rows.iter().map(|&r| m.values[r].clone()).collect(),
            })
            .collect();
        Ok(Self {
            features: self.features.clone(),
            values,
            labels,
            meta,
        })
    }

    /// Human-readable cell value (category label for categoricals).
    pub fn display_value(&self, j: usize, v: f64) -> String {
        match self.features[j].decode(v) {
            Some(label) => label.to_string(),
            None => v.to_string(),
        }
    }

    pub fn profile(&self) -> DatasetProfile {
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let col = self.column(j);
                let (min, max) = col
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        (lo.min(v), hi.max(v))
                    });
                FeatureProfile {
                    name: f.name.clone(),
                    kind: f.kind,
                    min: (f.kind == ColumnKind::Numeric).then_some(min),
                    max: (f.kind == ColumnKind::Numeric).then_some(max),
                    n_categories: f.is_categorical().then_some(f.categories.len()),
                }
            })
            .collect();
        DatasetProfile {
            n_rows: self.n_rows(),
            n_features: self.n_features(),
            n_outliers: self
                .labels
                .as_ref()
                .map(|l| l.iter().filter(|&&b| b).count()),
            features,
        }
    }
}

fn check_cell(spec: &FeatureSpec, v: f64) -> std::result::Result<(), String> {
    if !v.is_finite() {
        return Err(format!("non-finite value {v}"));
    }
    if spec.is_categorical() && spec.decode(v).is_none() {
        return Err(format!("invalid category code {v}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureProfile {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_categories: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub n_rows: usize,
    pub n_features: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_outliers: Option<usize>,
    pub features: Vec<FeatureProfile>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TabularDataset {
        TabularDataset::from_rows(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = TabularDataset::from_rows(vec!["a".into()], vec![vec![1.0], vec![1.0, 2.0]]);
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_non_finite() {
        let err = TabularDataset::from_rows(vec!["a".into()], vec![vec![f64::NAN]]);
        assert!(matches!(err, Err(Error::Parse { .. })));
    }

    #[test]
    fn label_length_checked() {
        assert!(small().with_labels(vec![true]).is_err());
        assert!(small().with_labels(vec![true, false, false]).is_ok());
    }

    #[test]
    fn select_columns_and_rows() {
        let d = small().with_labels(vec![false, true, false]).unwrap();
        let s = d.select_features(&[1]).unwrap();
        assert_eq!(s.column(0), vec![2.0, 4.0, 6.0]);
        let r = d.select_rows(&[2, 1]).unwrap();
        assert_eq!(r.row(0), &[5.0, 6.0]);
        assert_eq!(r.labels().unwrap(), &[false, true]);
        assert!(d.select_rows(&[3]).is_err());
    }

    #[test]
    fn category_codes_follow_lexicographic_order() {
        let f = FeatureSpec::categorical("c", vec!["z".into(), "a".into(), "m".into(), "a".into()]);
        assert_eq!(f.categories, vec!["a", "m", "z"]);
        assert_eq!(f.encode("m"), Some(1.0));
        assert_eq!(f.decode(2.0), Some("z"));
        assert_eq!(f.encode("q"), None);
    }
}
