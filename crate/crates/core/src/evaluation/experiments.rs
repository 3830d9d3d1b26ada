//! End-to-end experiment pipelines, each a pure function of its config.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate_rankings, AggregatedRank};
use super::metrics::{f1_score, DetectionMetrics};
use super::selection::{feature_selection_sweep, FeatureSelectionCurve, SelectionConfig};
use super::throughput::{throughput_benchmark, ThroughputReport};
use crate::dataset::{QuantileGrid, TabularDataset};
use crate::error::{Error, Result};
use crate::explainer::{rank_distribution, Explainer, GlobalExplanation, RankDistribution, Weights};
use crate::model::{Detector, IsolationForest, IsolationForestParams, ThresholdRule};
use crate::synthetic::{generate_test_outliers, generate_training, rows_of_family, OutlierFamily, SyntheticSpec};

/// Experiments runnable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SyntheticRanks,
    DatasetRanks,
    FeatureSelection,
    Throughput,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::SyntheticRanks,
        ExperimentKind::DatasetRanks,
        ExperimentKind::FeatureSelection,
        ExperimentKind::Throughput,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::SyntheticRanks => "synthetic-ranks",
            ExperimentKind::DatasetRanks => "dataset-ranks",
            ExperimentKind::FeatureSelection => "feature-selection",
            ExperimentKind::Throughput => "throughput",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.as_str()).collect();
                Error::invalid(format!("unknown experiment `{s}`; valid names: {}", valid.join(", ")))
            })
    }
}

/// Trains a forest and calibrates its threshold on `data`.
pub fn train_detector(
    data: &TabularDataset,
    n_trees: usize,
    sample_size: usize,
    seed: u64,
    rule: ThresholdRule,
) -> Result<Detector<IsolationForest>> {
    let forest = IsolationForest::fit(data, IsolationForestParams::new(n_trees, sample_size, seed))?;
    Detector::calibrate(forest, data, rule)
}

fn metrics_for(detector: &Detector<IsolationForest>, data: &TabularDataset) -> Result<Option<DetectionMetrics>> {
    match data.labels() {
        Some(labels) => Ok(Some(f1_score(&detector.predict(data)?, labels)?)),
        None => Ok(None),
    }
}

/// Share of explanations whose top `|relevant|` features are exactly `relevant`.
pub fn top_set_share(explanations: &[crate::explainer::LocalExplanation], relevant: &[usize]) -> f64 {
    if explanations.is_empty() {
        return 0.0;
    }
    let mut want = relevant.to_vec();
    want.sort_unstable();
    let hits = explanations
        .iter()
        .filter(|e| {
            let mut top: Vec<usize> = e.ranking().into_iter().take(want.len()).collect();
            top.sort_unstable();
            top == want
        })
        .count();
    hits as f64 / explanations.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRanksConfig {
    pub spec: SyntheticSpec,
    pub n_trees: usize,
    pub sample_size: usize,
    pub contamination: f64,
    pub quantiles: usize,
    pub weights: Weights,
}

impl Default for SyntheticRanksConfig {
    fn default() -> Self {
        Self {
            spec: SyntheticSpec::default(),
            n_trees: 100,
            sample_size: 256,
            contamination: 0.10,
            quantiles: 70,
            weights: Weights::default(),
        }
    }
}

impl SyntheticRanksConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.spec.seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRanks {
    pub family: OutlierFamily,
    pub n_outliers: usize,
    pub n_detected: usize,
    /// Share of detected outliers whose top features are exactly the
    /// family's relevant ones.
    pub relevant_top_share: f64,
    pub distribution: Option<RankDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRanksReport {
    pub seed: u64,
    pub threshold: f64,
    pub train: DetectionMetrics,
    /// Scored on the test outliers alone.
    pub test: DetectionMetrics,
    pub families: Vec<FamilyRanks>,
}

impl SyntheticRanksReport {
    pub fn family(&self, family: OutlierFamily) -> Option<&FamilyRanks> {
        self.families.iter().find(|f| f.family == family)
    }
}

pub fn run_synthetic_ranks(cfg: &SyntheticRanksConfig) -> Result<SyntheticRanksReport> {
    let train = generate_training(&cfg.spec)?;
    let test = generate_test_outliers(&cfg.spec)?;
    let detector = train_detector(
        &train,
        cfg.n_trees,
        cfg.sample_size,
        cfg.spec.seed,
        ThresholdRule::Contamination(cfg.contamination),
    )?;
    let grid = QuantileGrid::build(&train, cfg.quantiles)?;
    let explainer = Explainer::from_detector(&detector, &grid);
    let predicted = detector.predict(&test)?;

    let mut families = Vec::new();
    for family in OutlierFamily::ALL {
        let members = rows_of_family(&test, family);
        let detected: Vec<usize> = members.iter().copied().filter(|&i| predicted[i]).collect();
        let explanations = explainer.explain_rows(&test, &detected, cfg.weights)?;
        families.push(FamilyRanks {
            family,
            n_outliers: members.len(),
            n_detected: detected.len(),
            relevant_top_share: top_set_share(&explanations, family.relevant_features()),
            distribution: rank_distribution(&explanations).ok(),
        });
    }
    Ok(SyntheticRanksReport {
        seed: cfg.spec.seed,
        threshold: detector.threshold(),
        train: metrics_for(&detector, &train)?.ok_or(Error::MissingLabels)?,
        test: f1_score(&predicted, test.labels().ok_or(Error::MissingLabels)?)?,
        families,
    })
}

/// Restricts an experiment to rows whose meta column equals a value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowFilter {
    pub column: String,
    pub value: String,
}

impl RowFilter {
    pub fn rows(&self, data: &TabularDataset) -> Result<Vec<usize>> {
        let col = data
            .meta(&self.column)
            .ok_or_else(|| Error::invalid(format!("no meta column `{}`", self.column)))?;
        Ok(col
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == self.value)
            .map(|(i, _)| i)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRanksConfig {
    pub n_trees: usize,
    pub sample_size: usize,
    pub threshold: ThresholdRule,
    pub quantiles: usize,
    pub weights: Weights,
    pub seed: u64,
    /// Explain only detected rows of this subset; all detected rows if unset.
    pub subset: Option<RowFilter>,
}

impl Default for DatasetRanksConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            sample_size: 256,
            threshold: ThresholdRule::default(),
            quantiles: 70,
            weights: Weights::default(),
            seed: 0,
            subset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRanksReport {
    pub seed: u64,
    pub threshold: f64,
    pub metrics: Option<DetectionMetrics>,
    pub n_flagged: usize,
    pub n_subset: usize,
    pub detected_rows: Vec<usize>,
    pub distribution: Option<RankDistribution>,
    pub global: GlobalExplanation,
}

pub fn run_dataset_ranks(data: &TabularDataset, cfg: &DatasetRanksConfig) -> Result<DatasetRanksReport> {
    let detector = train_detector(data, cfg.n_trees, cfg.sample_size, cfg.seed, cfg.threshold)?;
    let grid = QuantileGrid::build(data, cfg.quantiles)?;
    let explainer = Explainer::from_detector(&detector, &grid);
    let flagged = explainer.predicted_anomalies(data)?;
    let subset = match &cfg.subset {
        Some(filter) => filter.rows(data)?,
        None => (0..data.n_rows()).collect(),
    };
    let detected: Vec<usize> = subset.iter().copied().filter(|i| flagged.binary_search(i).is_ok()).collect();
    let explanations = explainer.explain_rows(data, &detected, cfg.weights)?;
    Ok(DatasetRanksReport {
        seed: cfg.seed,
        threshold: detector.threshold(),
        metrics: metrics_for(&detector, data)?,
        n_flagged: flagged.len(),
        n_subset: subset.len(),
        global: GlobalExplanation::from_locals(grid.names(), &detected, &explanations)?,
        distribution: rank_distribution(&explanations).ok(),
        detected_rows: detected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelectionConfig {
    /// Model instances whose global rankings are aggregated (`N_fs`).
    pub n_instances: usize,
    pub n_trees: usize,
    pub sample_size: usize,
    pub threshold: ThresholdRule,
    pub quantiles: usize,
    pub weights: Weights,
    pub retrains: usize,
    pub seed: u64,
}

impl Default for FeatureSelectionConfig {
    fn default() -> Self {
        Self {
            n_instances: 5,
            n_trees: 100,
            sample_size: 256,
            threshold: ThresholdRule::default(),
            quantiles: 70,
            weights: Weights::default(),
            retrains: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelectionReport {
    pub seed: u64,
    pub instance_globals: Vec<GlobalExplanation>,
    pub aggregated: AggregatedRank,
    pub curve: FeatureSelectionCurve,
    pub guided_wins: usize,
    pub best_k: Option<usize>,
}

/// Ranks features by aggregating global explanations of `n_instances`
/// models (instance `i` seeded with `seed + i`), then sweeps subset sizes.
pub fn run_feature_selection(data: &TabularDataset, cfg: &FeatureSelectionConfig) -> Result<FeatureSelectionReport> {
    if data.labels().is_none() {
        return Err(Error::MissingLabels);
    }
    let grid = QuantileGrid::build(data, cfg.quantiles)?;
    let mut globals = Vec::with_capacity(cfg.n_instances);
    for i in 0..cfg.n_instances {
        let seed = cfg.seed.wrapping_add(i as u64);
        let detector = train_detector(data, cfg.n_trees, cfg.sample_size, seed, cfg.threshold)?;
        globals.push(Explainer::from_detector(&detector, &grid).explain_global(data, cfg.weights)?);
    }
    let aggregated = aggregate_rankings(grid.names(), &globals)?;
    let sweep = SelectionConfig {
        retrains: cfg.retrains,
        n_trees: cfg.n_trees,
        sample_size: cfg.sample_size,
        threshold: cfg.threshold,
        seed: cfg.seed,
    };
    let curve = feature_selection_sweep(data, &aggregated.ranking(), &sweep)?;
    Ok(FeatureSelectionReport {
        seed: cfg.seed,
        instance_globals: globals,
        aggregated,
        guided_wins: curve.guided_wins(),
        best_k: curve.best_k(),
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputConfig {
    pub n_trees: usize,
    pub sample_size: usize,
    pub contamination: f64,
    pub quantiles: usize,
    pub weights: Weights,
    pub fractions: Vec<f64>,
    pub seed: u64,
}

impl Default for ThroughputConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            sample_size: 256,
            contamination: 0.10,
            quantiles: 70,
            weights: Weights::default(),
            fractions: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            seed: 0,
        }
    }
}

/// Ring data shaped like the Satellite benchmark: 6435 rows, 36 features,
/// 827 planted outliers.
pub fn throughput_stand_in(seed: u64) -> Result<TabularDataset> {
    generate_training(&SyntheticSpec {
        n_features: 36,
        n_train: 6435,
        contamination: 827.0 / 6435.0,
        seed,
        ..SyntheticSpec::default()
    })
}

/// Trains on `data`, then times explanations of growing shares of the
/// predicted anomalies.
pub fn run_throughput(data: &TabularDataset, cfg: &ThroughputConfig) -> Result<ThroughputReport> {
    let detector = train_detector(
        data,
        cfg.n_trees,
        cfg.sample_size,
        cfg.seed,
        ThresholdRule::Contamination(cfg.contamination),
    )?;
    let grid = QuantileGrid::build(data, cfg.quantiles)?;
    let rows = Explainer::from_detector(&detector, &grid).predicted_anomalies(data)?;
    throughput_benchmark(
        detector.scorer(),
        *detector.mapper(),
        &grid,
        data,
        &rows,
        &cfg.fractions,
        cfg.weights,
    )
}
