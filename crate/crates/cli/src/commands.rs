use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use acme_ad::dataset::{load_csv, write_csv, CsvOptions, QuantileGrid, TabularDataset};
use acme_ad::evaluation::report::{report_stem, write_report};
use acme_ad::evaluation::{
    f1_score, run_dataset_ranks, run_feature_selection, run_synthetic_ranks, run_throughput,
    throughput_stand_in, DatasetRanksConfig, ExperimentKind, FeatureSelectionConfig, RowFilter,
    SyntheticRanksConfig, ThroughputConfig,
};
use acme_ad::explainer::plots::{global_bars, waterfall_series, what_if_series, write_series};
use acme_ad::explainer::{Explainer, GlobalExplanation};
use acme_ad::model::{Detector, IsolationForest, IsolationForestParams, SavedModel, ThresholdRule};
use acme_ad::synthetic::{generate_test_outliers, generate_training, SyntheticSpec};
use log::{info, warn};
use serde::Serialize;

use crate::args::{
    DataArgs, ExperimentArgs, ExplainArgs, ForestArgs, GridArgs, ServeArgs, SynthArgs, TrainArgs,
};
use crate::error::{CliError, Result};

/// Acceptance bars applied by `experiment --check`.
const MIN_RELEVANT_SHARE: f64 = 0.70;
const MIN_GUIDED_WIN_FRACTION: f64 = 0.8;
const MIN_THROUGHPUT_R2: f64 = 0.95;

fn csv_options(label: &Option<String>, meta: &[String]) -> CsvOptions {
    CsvOptions {
        schema: None,
        label_column: label.clone(),
        meta_columns: meta.to_vec(),
    }
}

fn load(path: &Path, label: &Option<String>, meta: &[String]) -> Result<TabularDataset> {
    let report = load_csv(path, &csv_options(label, meta))?;
    if report.rejected_rows > 0 {
        warn!(
            "{}: skipped {} rows with missing or non-finite values",
            path.display(),
            report.rejected_rows
        );
    }
    info!(
        "{}: {} rows, {} features",
        path.display(),
        report.dataset.n_rows(),
        report.dataset.n_features()
    );
    Ok(report.dataset)
}

fn load_data(args: &DataArgs) -> Result<TabularDataset> {
    load(&args.data, &args.label, &args.meta)
}

fn threshold_rule(threshold: Option<f64>, contamination: f64) -> ThresholdRule {
    match threshold {
        Some(t) => ThresholdRule::Fixed(t),
        None => ThresholdRule::Contamination(contamination),
    }
}

fn forest_rule(f: &ForestArgs) -> ThresholdRule {
    threshold_rule(f.threshold, f.contamination)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(acme_ad::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_csv_series<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_series(rows, BufWriter::new(file))?;
    Ok(())
}

fn check_names(expected: &[String], data: &TabularDataset, what: &str) -> Result<()> {
    let found = data.feature_names();
    if found != expected {
        return Err(CliError::Usage(format!(
            "{what} columns {found:?} do not match the model's features {expected:?}"
        )));
    }
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let data = load_data(&args.data)?;
    let f = &args.forest;
    let rule = forest_rule(f);
    let forest = IsolationForest::fit(&data, IsolationForestParams::new(f.trees, f.psi, f.seed))?;
    let detector = Detector::calibrate(forest, &data, rule)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    SavedModel::new(data.feature_names(), rule, &detector).save(&args.out)?;

    let predicted = detector.predict(&data)?;
    let flagged = predicted.iter().filter(|&&p| p).count();
    println!("threshold {}", detector.threshold());
    println!("flagged {flagged} of {} rows", data.n_rows());
    if let Some(labels) = data.labels() {
        let m = f1_score(&predicted, labels)?;
        println!(
            "precision {:.4} recall {:.4} f1 {:.4}",
            m.precision, m.recall, m.f1
        );
    }
    println!("model written to {}", args.out.display());
    Ok(())
}

pub fn explain(args: &ExplainArgs) -> Result<()> {
    let saved = SavedModel::load(&args.model)?;
    let data = load_data(&args.data)?;
    check_names(&saved.feature_names, &data, "data")?;
    let reference = match &args.reference {
        Some(path) => {
            let r = load(path, &args.data.label, &args.data.meta)?;
            check_names(&saved.feature_names, &r, "reference")?;
            r
        }
        None => data.clone(),
    };
    let grid = QuantileGrid::build(&reference, args.quantiles)?;
    let names = saved.feature_names.clone();
    let detector = saved.into_detector();
    let explainer = Explainer::from_detector(&detector, &grid);

    let rows = if args.rows.is_empty() {
        explainer.predicted_anomalies(&data)?
    } else {
        if let Some(&bad) = args.rows.iter().find(|&&r| r >= data.n_rows()) {
            return Err(CliError::Usage(format!(
                "row {bad} is out of range for {} rows",
                data.n_rows()
            )));
        }
        args.rows.clone()
    };
    let explanations = explainer.explain_rows(&data, &rows, args.weights)?;
    let global = GlobalExplanation::from_locals(&names, &rows, &explanations)?;

    create_dir(&args.out)?;
    for (row, e) in rows.iter().zip(&explanations) {
        write_json(&args.out.join(format!("explanation_{row}.json")), e)?;
        write_csv_series(&args.out.join(format!("whatif_{row}.csv")), &what_if_series(e))?;
        write_csv_series(&args.out.join(format!("waterfall_{row}.csv")), &waterfall_series(e))?;
    }
    write_json(&args.out.join("global.json"), &global)?;
    write_csv_series(&args.out.join("global_bars.csv"), &global_bars(&global))?;
    write_json(&args.out.join("grid.json"), &grid.to_json())?;

    println!(
        "explained {} rows ({} predicted anomalous) into {}",
        rows.len(),
        global.n_anomalies,
        args.out.display()
    );
    if let Some(top) = global.scores.first() {
        println!("top global feature: {} (T = {:.4})", top.name, top.total);
    }
    Ok(())
}

fn dataset_name(args: &ExperimentArgs) -> String {
    if let Some(name) = &args.dataset_name {
        return name.clone();
    }
    args.data
        .as_ref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "synthetic".to_string())
}

fn require_data(args: &ExperimentArgs) -> Result<TabularDataset> {
    let path = args
        .data
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("experiment {} needs --data", args.name)))?;
    load(path, &args.label, &args.meta)
}

fn parse_subset(spec: &str) -> Result<RowFilter> {
    let (column, value) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--subset expects column=value, got `{spec}`")))?;
    Ok(RowFilter {
        column: column.to_string(),
        value: value.to_string(),
    })
}

fn check(enabled: bool, ok: bool, what: String) -> Result<()> {
    if enabled && !ok {
        return Err(CliError::CheckFailed(what));
    }
    Ok(())
}

pub fn experiment(args: &ExperimentArgs) -> Result<()> {
    let name = dataset_name(args);
    let stem = report_stem(args.name, &name, args.seed);
    let rule = threshold_rule(args.threshold, args.contamination);
    let (json, csv) = match args.name {
        ExperimentKind::SyntheticRanks => {
            if args.data.is_some() {
                return Err(CliError::Usage("synthetic-ranks generates its own data".into()));
            }
            let cfg = SyntheticRanksConfig {
                n_trees: args.trees,
                sample_size: args.psi,
                contamination: args.contamination,
                quantiles: args.quantiles,
                weights: args.weights,
                ..SyntheticRanksConfig::default()
            }
            .with_seed(args.seed);
            let report = run_synthetic_ranks(&cfg)?;
            println!("test f1 {:.4} (train f1 {:.4})", report.test.f1, report.train.f1);
            for f in &report.families {
                println!(
                    "{}: {} of {} detected, relevant features on top for {:.1}%",
                    f.family,
                    f.n_detected,
                    f.n_outliers,
                    100.0 * f.relevant_top_share
                );
            }
            let paths = write_report(&args.out, &stem, &report)?;
            let worst = report
                .families
                .iter()
                .map(|f| f.relevant_top_share)
                .fold(f64::INFINITY, f64::min);
            check(
                args.check,
                worst >= MIN_RELEVANT_SHARE,
                format!("lowest family share {worst:.3} < {MIN_RELEVANT_SHARE}"),
            )?;
            paths
        }
        ExperimentKind::DatasetRanks => {
            let data = require_data(args)?;
            let cfg = DatasetRanksConfig {
                n_trees: args.trees,
                sample_size: args.psi,
                threshold: rule,
                quantiles: args.quantiles,
                weights: args.weights,
                seed: args.seed,
                subset: args.subset.as_deref().map(parse_subset).transpose()?,
            };
            let report = run_dataset_ranks(&data, &cfg)?;
            if let Some(m) = &report.metrics {
                println!("f1 {:.4} ({} flagged)", m.f1, report.n_flagged);
            }
            println!("{} of {} subset rows detected", report.detected_rows.len(), report.n_subset);
            if let Some(d) = &report.distribution {
                let shares = d.first_place_shares();
                let mut order: Vec<usize> = (0..shares.len()).collect();
                order.sort_by(|&a, &b| shares[b].total_cmp(&shares[a]).then(a.cmp(&b)));
                let top: Vec<String> = order
                    .iter()
                    .take(3)
                    .map(|&j| format!("{} {:.2}", d.feature_names[j], shares[j]))
                    .collect();
                println!("rank-1 shares: {}", top.join(", "));
            }
            write_report(&args.out, &stem, &report)?
        }
        ExperimentKind::FeatureSelection => {
            let data = require_data(args)?;
            let cfg = FeatureSelectionConfig {
                n_instances: args.instances,
                n_trees: args.trees,
                sample_size: args.psi,
                threshold: rule,
                quantiles: args.quantiles,
                weights: args.weights,
                retrains: args.retrains,
                seed: args.seed,
            };
            let report = run_feature_selection(&data, &cfg)?;
            println!("ranking: {}", report.aggregated.ranked_names().join(", "));
            for p in &report.curve.points {
                println!(
                    "k={:<3} guided {:.4}  random {:.4}",
                    p.k, p.guided_median_f1, p.random_median_f1
                );
            }
            let p = data.n_features();
            let needed = (MIN_GUIDED_WIN_FRACTION * p as f64).ceil() as usize;
            println!("guided >= random for {} of {p} subset sizes", report.guided_wins);
            let paths = write_report(&args.out, &stem, &report)?;
            check(
                args.check,
                report.guided_wins >= needed,
                format!("guided curve wins {} < {needed}", report.guided_wins),
            )?;
            paths
        }
        ExperimentKind::Throughput => {
            let data = match &args.data {
                Some(_) => require_data(args)?,
                None => throughput_stand_in(args.seed)?,
            };
            let cfg = ThroughputConfig {
                n_trees: args.trees,
                sample_size: args.psi,
                contamination: args.contamination,
                quantiles: args.quantiles,
                weights: args.weights,
                fractions: args.fractions.iter().map(|f| f / 100.0).collect(),
                seed: args.seed,
            };
            let report = run_throughput(&data, &cfg)?;
            for p in &report.points {
                println!(
                    "{:>5.1}%  {:>6} rows  {:>10} calls  {:.3}s",
                    100.0 * p.fraction,
                    p.n_rows,
                    p.scorer_calls,
                    p.seconds
                );
            }
            println!("calls per row {}", report.calls_per_row);
            let r2 = report.fit.map(|f| f.r_squared).unwrap_or(f64::NAN);
            println!("linear fit r^2 {r2:.4}");
            let paths = write_report(&args.out, &stem, &report)?;
            check(
                args.check,
                r2 >= MIN_THROUGHPUT_R2,
                format!("r^2 {r2:.4} < {MIN_THROUGHPUT_R2}"),
            )?;
            paths
        }
    };
    println!("report: {} and {}", json.display(), csv.display());
    Ok(())
}

pub fn grid(args: &GridArgs) -> Result<()> {
    let data = load_data(&args.data)?;
    let grid = QuantileGrid::build(&data, args.quantiles)?;
    match &args.out {
        Some(path) => write_json(path, &grid.to_json()),
        None => {
            let text = serde_json::to_string_pretty(&grid.to_json()).map_err(acme_ad::Error::from)?;
            println!("{text}");
            Ok(())
        }
    }
}

fn write_dataset(path: PathBuf, data: &TabularDataset) -> Result<()> {
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    write_csv(data, "label", &mut w)?;
    w.flush().map_err(|e| CliError::io(&path, e))
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_features: args.features,
        n_train: args.samples,
        contamination: args.contamination,
        seed: args.seed,
        ..SyntheticSpec::default()
    };
    let train = generate_training(&spec)?;
    let test = generate_test_outliers(&spec)?;
    create_dir(&args.out)?;
    write_dataset(args.out.join("train.csv"), &train)?;
    write_dataset(args.out.join("test.csv"), &test)?;
    println!(
        "wrote {} training and {} test rows to {}",
        train.n_rows(),
        test.n_rows(),
        args.out.display()
    );
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start runtime: {e}")))?;
    runtime
        .block_on(acme_ad_service::serve(args.addr))
        .map_err(|e| CliError::Runtime(format!("server error: {e}")))
}
