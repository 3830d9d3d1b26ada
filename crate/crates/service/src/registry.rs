//! In-memory store of datasets, models and explanations.
//!
//! Entries are immutable once inserted. Sub-scores are cached per
//! `(model, row, Q)` so that weight changes never reach the scorer.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use acme_ad::dataset::{QuantileGrid, TabularDataset};
use acme_ad::evaluation::{f1_score, DetectionMetrics};
use acme_ad::explainer::{Explainer, GlobalExplanation, LocalExplanation, Weights};
use acme_ad::model::{
    CountingScorer, Detector, IsolationForest, IsolationForestParams, ThresholdRule,
};
use acme_ad::Result;
use serde::Serialize;

pub type ModelDetector = Detector<CountingScorer<IsolationForest>>;

#[derive(Debug)]
pub struct DatasetEntry {
    pub data: TabularDataset,
    pub quantiles: usize,
    pub rejected_rows: usize,
    grids: Mutex<HashMap<usize, Arc<QuantileGrid>>>,
}

impl DatasetEntry {
    pub fn new(data: TabularDataset, quantiles: usize, rejected_rows: usize) -> Result<Self> {
        let grid = QuantileGrid::build(&data, quantiles)?;
        Ok(Self {
            data,
            quantiles,
            rejected_rows,
            grids: Mutex::new(HashMap::from([(quantiles, Arc::new(grid))])),
        })
    }

    /// Grid with `quantiles` levels, built on first use.
    pub fn grid(&self, quantiles: usize) -> Result<Arc<QuantileGrid>> {
        if let Some(g) = self.grids.lock().expect("grid lock").get(&quantiles) {
            return Ok(Arc::clone(g));
        }
        let grid = Arc::new(QuantileGrid::build(&self.data, quantiles)?);
        let mut grids = self.grids.lock().expect("grid lock");
        Ok(Arc::clone(grids.entry(quantiles).or_insert(grid)))
    }
}

/// Training parameters accepted by `POST /models`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub trees: usize,
    pub psi: usize,
    /// Ignored when `threshold` is set.
    pub contamination: f64,
    pub threshold: Option<f64>,
    pub seed: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            trees: 100,
            psi: 256,
            contamination: 0.10,
            threshold: None,
            seed: 0,
        }
    }
}

impl ModelParams {
    pub fn rule(&self) -> ThresholdRule {
        match self.threshold {
            Some(t) => ThresholdRule::Fixed(t),
            None => ThresholdRule::Contamination(self.contamination),
        }
    }
}

#[derive(Debug)]
pub struct ModelEntry {
    pub dataset_id: u64,
    pub dataset: Arc<DatasetEntry>,
    pub params: ModelParams,
    pub detector: ModelDetector,
    pub n_flagged: usize,
    pub metrics: Option<DetectionMetrics>,
}

impl ModelEntry {
    pub fn train(dataset_id: u64, dataset: Arc<DatasetEntry>, params: ModelParams) -> Result<Self> {
        let forest = IsolationForest::fit(
            &dataset.data,
            IsolationForestParams::new(params.trees, params.psi, params.seed),
        )?;
        let detector = Detector::calibrate(CountingScorer::new(forest), &dataset.data, params.rule())?;
        let predicted = detector.predict(&dataset.data)?;
        let metrics = dataset
            .data
            .labels()
            .map(|truth| f1_score(&predicted, truth))
            .transpose()?;
        Ok(Self {
            dataset_id,
            n_flagged: predicted.iter().filter(|&&p| p).count(),
            dataset,
            params,
            detector,
            metrics,
        })
    }

    /// Points scored so far, calibration included.
    pub fn scorer_calls(&self) -> u64 {
        self.detector.scorer().calls()
    }
}

/// What an explanation was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Row(usize),
    Point(Vec<f64>),
}

#[derive(Debug)]
pub struct ExplanationEntry {
    pub model_id: u64,
    pub quantiles: usize,
    pub target: Target,
    pub explanation: LocalExplanation,
}

/// Explanations of a model's predicted anomalies, with their rows.
#[derive(Debug)]
pub struct AnomalySet {
    pub rows: Vec<usize>,
    pub explanations: Vec<LocalExplanation>,
}

impl AnomalySet {
    pub fn global(&self, names: &[String], weights: Weights) -> Result<GlobalExplanation> {
        let reweighted: Vec<LocalExplanation> =
            self.explanations.iter().map(|e| e.reweight(weights)).collect();
        GlobalExplanation::from_locals(names, &self.rows, &reweighted)
    }
}

#[derive(Debug, Default)]
pub struct Registry {
    next_id: AtomicU64,
    datasets: RwLock<HashMap<u64, Arc<DatasetEntry>>>,
    models: RwLock<HashMap<u64, Arc<ModelEntry>>>,
    explanations: RwLock<HashMap<u64, Arc<ExplanationEntry>>>,
    local_cache: RwLock<HashMap<(u64, usize, usize), Arc<LocalExplanation>>>,
    anomaly_cache: RwLock<HashMap<(u64, usize), Arc<AnomalySet>>>,
}

fn get<K: std::hash::Hash + Eq, V>(map: &RwLock<HashMap<K, Arc<V>>>, key: &K) -> Option<Arc<V>> {
    map.read().expect("registry lock").get(key).cloned()
}

fn put<K: std::hash::Hash + Eq, V>(map: &RwLock<HashMap<K, Arc<V>>>, key: K, value: V) -> Arc<V> {
    let value = Arc::new(value);
    map.write().expect("registry lock").insert(key, Arc::clone(&value));
    value
}

impl Registry {
    /// Ids are shared across kinds and start at 1.
    fn fresh_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed) + 1
    }

    pub fn add_dataset(&self, entry: DatasetEntry) -> u64 {
        let id = self.fresh_id();
        put(&self.datasets, id, entry);
        id
    }

    pub fn dataset(&self, id: u64) -> Option<Arc<DatasetEntry>> {
        get(&self.datasets, &id)
    }

    pub fn remove_dataset(&self, id: u64) -> bool {
        self.datasets.write().expect("registry lock").remove(&id).is_some()
    }

    pub fn add_model(&self, entry: ModelEntry) -> (u64, Arc<ModelEntry>) {
        let id = self.fresh_id();
        (id, put(&self.models, id, entry))
    }

    pub fn model(&self, id: u64) -> Option<Arc<ModelEntry>> {
        get(&self.models, &id)
    }

    /// Drops the model and every cached result derived from it.
    pub fn remove_model(&self, id: u64) -> bool {
        let removed = self.models.write().expect("registry lock").remove(&id).is_some();
        self.local_cache.write().expect("registry lock").retain(|k, _| k.0 != id);
        self.anomaly_cache.write().expect("registry lock").retain(|k, _| k.0 != id);
        removed
    }

    pub fn add_explanation(&self, entry: ExplanationEntry) -> u64 {
        let id = self.fresh_id();
        put(&self.explanations, id, entry);
        id
    }

    pub fn explanation(&self, id: u64) -> Option<Arc<ExplanationEntry>> {
        get(&self.explanations, &id)
    }

    /// Explanation of a dataset row. Scores only on a cache miss.
    pub fn explain_row(
        &self,
        model_id: u64,
        model: &ModelEntry,
        row: usize,
        quantiles: usize,
        weights: Weights,
    ) -> Result<LocalExplanation> {
        let key = (model_id, row, quantiles);
        if let Some(cached) = get(&self.local_cache, &key) {
            return Ok(cached.reweight(weights));
        }
        let grid = model.dataset.grid(quantiles)?;
        let explainer = Explainer::from_detector(&model.detector, &grid);
        let e = explainer
            .explain_rows(&model.dataset.data, &[row], weights)?
            .remove(0);
        put(&self.local_cache, key, e.clone());
        Ok(e)
    }

    pub fn explain_point(
        &self,
        model: &ModelEntry,
        point: &[f64],
        quantiles: usize,
        weights: Weights,
    ) -> Result<LocalExplanation> {
        let grid = model.dataset.grid(quantiles)?;
        Explainer::from_detector(&model.detector, &grid).explain_local(point, weights)
    }

    /// Explanations of the model's predicted anomalies on its training data.
    pub fn anomalies(&self, model_id: u64, model: &ModelEntry, quantiles: usize) -> Result<Arc<AnomalySet>> {
        let key = (model_id, quantiles);
        if let Some(cached) = get(&self.anomaly_cache, &key) {
            return Ok(cached);
        }
        let grid = model.dataset.grid(quantiles)?;
        let explainer = Explainer::from_detector(&model.detector, &grid);
        let (rows, explanations) = explainer.explain_anomalies(&model.dataset.data, Weights::default())?;
        Ok(put(&self.anomaly_cache, key, AnomalySet { rows, explanations }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ladder() -> TabularDataset {
        let rows = (0..20).map(|i| vec![f64::from(i), f64::from(i % 5)]).collect();
        TabularDataset::from_rows(vec!["a".into(), "b".into()], rows).unwrap()
    }

    #[test]
    fn ids_are_sequential_across_kinds() {
        let reg = Registry::default();
        let d1 = reg.add_dataset(DatasetEntry::new(ladder(), 5, 0).unwrap());
        let d2 = reg.add_dataset(DatasetEntry::new(ladder(), 5, 0).unwrap());
        assert_eq!((d1, d2), (1, 2));
        let (m, _) = reg.add_model(
            ModelEntry::train(d1, reg.dataset(d1).unwrap(), ModelParams { psi: 8, ..Default::default() }).unwrap(),
        );
        assert_eq!(m, 3);
    }

    #[test]
    fn grids_are_built_once_per_resolution() {
        let entry = DatasetEntry::new(ladder(), 5, 0).unwrap();
        let a = entry.grid(7).unwrap();
        let b = entry.grid(7).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(entry.grid(5).unwrap().resolution(), 5);
    }

    #[test]
    fn cached_rows_are_not_rescored() {
        let reg = Registry::default();
        let d = reg.add_dataset(DatasetEntry::new(ladder(), 5, 0).unwrap());
        let entry = ModelEntry::train(d, reg.dataset(d).unwrap(), ModelParams { psi: 8, ..Default::default() }).unwrap();
        let (id, model) = reg.add_model(entry);
        let first = reg.explain_row(id, &model, 3, 5, Weights::default()).unwrap();
        let calls = model.scorer_calls();
        let again = reg.explain_row(id, &model, 3, 5, Weights::RATIO_ONLY).unwrap();
        assert_eq!(model.scorer_calls(), calls);
        assert_eq!(again, first.reweight(Weights::RATIO_ONLY));
        reg.explain_row(id, &model, 3, 6, Weights::default()).unwrap();
        assert_eq!(model.scorer_calls(), calls + 2 * 6 + 1);
    }

    #[test]
    fn removing_a_model_drops_its_cache() {
        let reg = Registry::default();
        let d = reg.add_dataset(DatasetEntry::new(ladder(), 5, 0).unwrap());
        let entry = ModelEntry::train(d, reg.dataset(d).unwrap(), ModelParams { psi: 8, ..Default::default() }).unwrap();
        let (id, model) = reg.add_model(entry);
        reg.explain_row(id, &model, 0, 5, Weights::default()).unwrap();
        assert!(reg.remove_model(id));
        assert!(reg.local_cache.read().unwrap().is_empty());
        assert!(!reg.remove_model(id));
    }
}
