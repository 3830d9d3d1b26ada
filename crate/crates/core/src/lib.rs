//! Feature attributions for tabular anomaly detectors by quantile
//! perturbation.
//!
//! Each feature of a point is moved through a quantile ladder of the
//! training data while the others stay fixed. The detector's response is
//! mapped onto `[0, 1]` around its decision threshold and summarized by four
//! sub-scores, whose weighted sum ranks the features.
//!
//! ```
//! use acme_ad::dataset::{QuantileGrid, TabularDataset};
//! use acme_ad::explainer::{Explainer, Weights};
//! use acme_ad::model::{FnScorer, ScoreMapper};
//!
//! let rows = (0..50).map(|i| vec![(i % 10) as f64, (i / 10) as f64]).collect();
//! let data = TabularDataset::from_rows(vec!["a".into(), "b".into()], rows).unwrap();
//! let grid = QuantileGrid::build(&data, 10).unwrap();
//! let scorer = FnScorer(|x: &[f64]| x[0] + 0.1 * x[1]);
//! let mapper = ScoreMapper::new(8.0, 0.0, 10.0).unwrap();
//!
//! let e = Explainer::new(&scorer, mapper, &grid)
//!     .explain_local(&[9.0, 2.0], Weights::default())
//!     .unwrap();
//! assert_eq!(e.ranked_names(), ["a", "b"]);
//! ```
//!
//! Modules:
//! - [`dataset`]: tabular data, CSV input and quantile grids.
//! - [`model`]: the scorer trait, Isolation Forest, thresholds and the score map.
//! - [`explainer`]: local and global explanations and plot series.
//! - [`synthetic`]: the ring benchmark generator.
//! - [`evaluation`]: metrics, rank aggregation and the experiment pipelines.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod explainer;
pub mod model;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
