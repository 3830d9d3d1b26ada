use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{ColumnKind, FeatureSpec, MetaColumn, TabularDataset};
use crate::error::{Error, Result};

/// How to interpret the columns of a CSV file.
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Feature columns in file order. Kinds are inferred when absent; a
    /// categorical spec with an empty dictionary is filled from the data.
    pub schema: Option<Vec<FeatureSpec>>,
    /// Column holding 0/1 ground truth (1 = outlier).
    pub label_column: Option<String>,
    /// Columns kept verbatim as row metadata instead of features.
    pub meta_columns: Vec<String>,
}

impl CsvOptions {
    pub fn labelled(label_column: impl Into<String>) -> Self {
        Self {
            label_column: Some(label_column.into()),
            ..Self::default()
        }
    }

    pub fn with_meta(mut self, column: impl Into<String>) -> Self {
        self.meta_columns.push(column.into());
        self
    }

    pub fn with_schema(mut self, schema: Vec<FeatureSpec>) -> Self {
        self.schema = Some(schema);
        self
    }
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub dataset: TabularDataset,
    /// Rows dropped because a numeric cell was missing or non-finite.
    pub rejected_rows: usize,
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<LoadReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, options)
}

pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<LoadReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::EmptyDataset(": missing header".into()));
    }

    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaMismatch(format!("no column named `{name}`")))
    };
    let label_idx = options.label_column.as_deref().map(find).transpose()?;
    let meta_idx = options
        .meta_columns
        .iter()
        .map(|m| find(m))
        .collect::<Result<Vec<_>>>()?;
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|i| Some(*i) != label_idx && !meta_idx.contains(i))
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::EmptyDataset(": no feature columns".into()));
    }

    if let Some(schema) = &options.schema {
        let names: Vec<&str> = feature_idx.iter().map(|&i| header[i].as_str()).collect();
        let expected: Vec<&str> = schema.iter().map(|f| f.name.as_str()).collect();
        if names != expected {
            return Err(Error::SchemaMismatch(format!(
                "expected features {expected:?}, found {names:?}"
            )));
        }
    }

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != header.len() {
            return Err(Error::ColumnCount {
                line,
                expected: header.len(),
                found: rec.len(),
            });
        }
        records.push((line, rec));
    }

    let kinds: Vec<ColumnKind> = match &options.schema {
        Some(schema) => schema.iter().map(|f| f.kind).collect(),
        None => feature_idx
            .iter()
            .map(|&c| {
                let numeric = records
                    .iter()
                    .map(|(_, r)| &r[c])
                    .filter(|s| !s.is_empty())
                    .all(|s| s.parse::<f64>().is_ok());
                if numeric {
                    ColumnKind::Numeric
                } else {
                    ColumnKind::Categorical
                }
            })
            .collect(),
    };

    // Reject rows with missing or non-finite numeric cells; anything else
    // unparseable in a numeric column is a hard error.
    let mut kept = Vec::with_capacity(records.len());
    let mut rejected = 0;
    'rows: for (line, rec) in &records {
        for (k, &c) in feature_idx.iter().enumerate() {
            if kinds[k] != ColumnKind::Numeric {
                continue;
            }
            let cell = &rec[c];
            if cell.is_empty() {
                rejected += 1;
                continue 'rows;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => {}
                Ok(_) => {
                    rejected += 1;
                    continue 'rows;
                }
                Err(_) => {
                    return Err(Error::Parse {
                        line: *line,
                        column: header[c].clone(),
                        message: format!("`{cell}` is not a number"),
                    })
                }
            }
        }
        kept.push((*line, rec));
    }
    if kept.is_empty() {
        return Err(Error::EmptyDataset(if rejected > 0 {
            format!(" after rejecting {rejected} rows")
        } else {
            String::new()
        }));
    }

    let features: Vec<FeatureSpec> = feature_idx
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let declared = options.schema.as_ref().map(|s| &s[k]);
            match kinds[k] {
                ColumnKind::Numeric => FeatureSpec::numeric(header[c].clone()),
                ColumnKind::Categorical => match declared {
                    Some(spec) if !spec.categories.is_empty() => spec.clone(),
                    _ => {
                        let cats: BTreeSet<&str> = kept.iter().map(|(_, r)| &r[c]).collect();
                        FeatureSpec::categorical(
                            header[c].clone(),
                            cats.into_iter().map(str::to_string).collect(),
                        )
                    }
                },
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(kept.len());
    let mut labels = label_idx.map(|_| Vec::with_capacity(kept.len()));
    let mut meta: Vec<Vec<String>> = vec![Vec::with_capacity(kept.len()); meta_idx.len()];
    for (line, rec) in &kept {
        let mut row = Vec::with_capacity(features.len());
        for (spec, &c) in features.iter().zip(&feature_idx) {
            let cell = &rec[c];
            let v = match spec.kind {
                ColumnKind::Numeric => cell.parse::<f64>().expect("checked above"),
                ColumnKind::Categorical => {
                    spec.encode(cell).ok_or_else(|| Error::UnseenCategory {
                        feature: spec.name.clone(),
                        value: cell.to_string(),
                    })?
                }
            };
            row.push(v);
        }
        rows.push(row);
        if let (Some(li), Some(labels)) = (label_idx, labels.as_mut()) {
            let flag = match &rec[li] {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Parse {
                        line: *line,
                        column: header[li].clone(),
                        message: format!("label must be 0 or 1, got `{other}`"),
                    })
                }
            };
            labels.push(flag);
        }
        for (m, &c) in meta.iter_mut().zip(&meta_idx) {
            m.push(rec[c].to_string());
        }
    }

    let mut dataset = TabularDataset::new(features, rows)?;
    if let Some(labels) = labels {
        dataset = dataset.with_labels(labels)?;
    }
    for (values, &c) in meta.into_iter().zip(&meta_idx) {
        dataset.meta.push(MetaColumn {
            name: header[c].clone(),
            values,
        });
    }
    Ok(LoadReport {
        dataset,
        rejected_rows: rejected,
    })
}

/// Writes features, then metadata columns, then the label column (if any).
pub fn write_csv<W: Write>(dataset: &TabularDataset, label_column: &str, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = dataset.features.iter().map(|f| f.name.as_str()).collect();
    header.extend(dataset.meta.iter().map(|m| m.name.as_str()));
    if dataset.labels.is_some() {
        header.push(label_column);
    }
    w.write_record(&header)?;
    for (i, row) in dataset.rows().enumerate() {
        let mut rec: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, &v)| dataset.display_value(j, v))
            .collect();
        rec.extend(dataset.meta.iter().map(|m| m.values[i].clone()));
        if let Some(labels) = &dataset.labels {
            rec.push(if labels[i] { "1" } else { "0" }.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, options: &CsvOptions) -> Result<LoadReport> {
        read_csv(text.as_bytes(), options)
    }

    #[test]
    fn minimal_file() {
        let r = read("a\n1.0\n", &CsvOptions::default()).unwrap();
        assert_eq!(r.dataset.n_rows(), 1);
        assert_eq!(r.dataset.n_features(), 1);
        assert_eq!(r.dataset.features()[0].kind, ColumnKind::Numeric);
        assert_eq!(r.rejected_rows, 0);
    }

    #[test]
    fn nan_row_rejected() {
        let r = read("a,b\n1,2\nNaN,3\n4,5\n", &CsvOptions::default()).unwrap();
        assert_eq!(r.rejected_rows, 1);
        assert_eq!(r.dataset.n_rows(), 2);
        assert_eq!(r.dataset.column(0), vec![1.0, 4.0]);
    }

    #[test]
    fn all_rows_rejected_is_empty() {
        let err = read("a\ninf\nNaN\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset(_)));
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(
            read("", &CsvOptions::default()),
            Err(Error::EmptyDataset(_))
        ));
        assert!(matches!(
            read("a,b\n", &CsvOptions::default()),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn column_count_mismatch() {
        let err = read("a,b\n1,2\n3\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::ColumnCount { expected: 2, found: 1, .. }));
    }

    #[test]
    fn labels_and_meta_are_not_features() {
        let opts = CsvOptions::labelled("y").with_meta("kind");
        let r = read("x,kind,y\n1,foo,0\n2,bar,1\n", &opts).unwrap();
        let d = r.dataset;
        assert_eq!(d.feature_names(), vec!["x"]);
        assert_eq!(d.labels().unwrap(), &[false, true]);
        assert_eq!(d.meta("kind").unwrap(), &["foo".to_string(), "bar".to_string()]);
    }

    #[test]
    fn bad_label_value() {
        let err = read("x,y\n1,2\n", &CsvOptions::labelled("y")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn infers_categoricals() {
        let r = read("n,c\n1,b\n2,a\n3,b\n", &CsvOptions::default()).unwrap();
        let d = r.dataset;
        assert_eq!(d.features()[1].kind, ColumnKind::Categorical);
        assert_eq!(d.features()[1].categories, vec!["a", "b"]);
        assert_eq!(d.column(1), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn schema_header_must_match() {
        let opts = CsvOptions::default().with_schema(vec![FeatureSpec::numeric("z")]);
        assert!(matches!(
            read("a\n1\n", &opts),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn declared_numeric_with_text_is_an_error() {
        let opts = CsvOptions::default().with_schema(vec![FeatureSpec::numeric("a")]);
        assert!(matches!(read("a\nfoo\n", &opts), Err(Error::Parse { .. })));
    }

    #[test]
    fn schema_dictionary_rejects_unseen_category() {
        let opts = CsvOptions::default()
            .with_schema(vec![FeatureSpec::categorical("c", vec!["a".into()])]);
        assert!(matches!(
            read("c\nb\n", &opts),
            Err(Error::UnseenCategory { .. })
        ));
    }

    #[test]
    fn write_then_read_preserves_values() {
        let r = read("n,c,y\n1.25,b,0\n-3e-7,a,1\n", &CsvOptions::labelled("y")).unwrap();
        let mut buf = Vec::new();
        write_csv(&r.dataset, "y", &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &CsvOptions::labelled("y")).unwrap();
        assert_eq!(back.dataset, r.dataset);
    }
}
