use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Detector, IsolationForest, ScoreMapper, ThresholdRule};
use crate::error::{Error, Result};

const FORMAT: &str = "acme-ad/isolation-forest";
const VERSION: u32 = 1;

/// On-disk form of a trained isolation-forest detector (JSON).
///
/// Floats are written with shortest round-trip formatting and parsed back
/// exactly, so a reloaded model scores bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub threshold_rule: ThresholdRule,
    pub mapper: ScoreMapper,
    pub forest: IsolationForest,
}

impl SavedModel {
    pub fn new(
        feature_names: Vec<String>,
        threshold_rule: ThresholdRule,
        detector: &Detector<IsolationForest>,
    ) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            feature_names,
            threshold_rule,
            mapper: *detector.mapper(),
            forest: detector.scorer().clone(),
        }
    }

    pub fn into_detector(self) -> Detector<IsolationForest> {
        Detector::new(self.forest, self.mapper)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SavedModel = serde_json::from_str(text)?;
        if model.format != FORMAT {
            return Err(Error::ModelFormat(format!("unknown format `{}`", model.format)));
        }
        if model.version != VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {}", model.version)));
        }
        if model.feature_names.len() != model.forest.n_features() {
            return Err(Error::ModelFormat(
                "feature names do not match the forest".into(),
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
