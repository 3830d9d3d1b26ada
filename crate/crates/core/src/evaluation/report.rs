//! JSON and CSV report files named `{experiment}_{dataset}_{seed}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiments::{
    DatasetRanksReport, ExperimentKind, FeatureSelectionReport, SyntheticRanksReport,
};
use super::throughput::ThroughputReport;
use crate::error::{Error, Result};
use crate::explainer::RankDistribution;

/// A report that also has a flat tabular form.
pub trait TableReport: Serialize {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<String>>;
}

pub fn report_stem(experiment: ExperimentKind, dataset: &str, seed: u64) -> String {
    format!("{experiment}_{dataset}_{seed}")
}

/// Writes `<stem>.json` and `<stem>.csv` into `dir` and returns both paths.
pub fn write_report<R: TableReport>(dir: &Path, stem: &str, report: &R) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json_path = dir.join(format!("{stem}.json"));
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;

    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(report.header())?;
    for row in report.rows() {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok((json_path, csv_path))
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn distribution_rows(prefix: &[String], d: &RankDistribution) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for (j, name) in d.feature_names.iter().enumerate() {
        for (pos, share) in d.fractions[j].iter().enumerate() {
            let mut row = prefix.to_vec();
            row.extend([name.clone(), (pos + 1).to_string(), share.to_string()]);
            out.push(row);
        }
    }
    out
}

impl TableReport for SyntheticRanksReport {
    fn header(&self) -> Vec<String> {
        header(&["family", "feature", "position", "share"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.families
            .iter()
            .filter_map(|f| {
                f.distribution
                    .as_ref()
                    .map(|d| distribution_rows(&[f.family.to_string()], d))
            })
            .flatten()
            .collect()
    }
}

impl TableReport for DatasetRanksReport {
    fn header(&self) -> Vec<String> {
        header(&["feature", "position", "share"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.distribution
            .as_ref()
            .map(|d| distribution_rows(&[], d))
            .unwrap_or_default()
    }
}

impl TableReport for FeatureSelectionReport {
    fn header(&self) -> Vec<String> {
        header(&["k", "features", "guided_median_f1", "random_median_f1"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.curve
            .points
            .iter()
            .map(|p| {
                vec![
                    p.k.to_string(),
                    p.features.join(";"),
                    p.guided_median_f1.to_string(),
                    p.random_median_f1.to_string(),
                ]
            })
            .collect()
    }
}

impl TableReport for ThroughputReport {
    fn header(&self) -> Vec<String> {
        header(&["fraction", "n_rows", "scorer_calls", "seconds"])
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.points
            .iter()
            .map(|p| {
                vec![
                    p.fraction.to_string(),
                    p.n_rows.to_string(),
                    p.scorer_calls.to_string(),
                    p.seconds.to_string(),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::throughput::ThroughputPoint;

    #[test]
    fn writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let report = ThroughputReport {
            points: vec![ThroughputPoint {
                fraction: 1.0,
                n_rows: 3,
                scorer_calls: 30,
                seconds: 0.5,
            }],
            calls_per_row: 10,
            fit: None,
        };
        let stem = report_stem(ExperimentKind::Throughput, "toy", 7);
        assert_eq!(stem, "throughput_toy_7");
        let (json, csv) = write_report(dir.path(), &stem, &report).unwrap();
        assert!(fs::read_to_string(json).unwrap().contains("\"calls_per_row\": 10"));
        assert_eq!(
            fs::read_to_string(csv).unwrap(),
            "fraction,n_rows,scorer_calls,seconds\n1,3,30,0.5\n"
        );
    }
}
