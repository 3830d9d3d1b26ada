//! Detection metrics, rank aggregation, feature-selection sweeps, throughput
//! measurement and the experiment pipelines built on them.

mod aggregate;
pub mod experiments;
mod metrics;
pub mod report;
mod selection;
mod throughput;

pub use aggregate::{aggregate_rankings, rank_contribution, AggregatedRank};
pub use experiments::{
    run_dataset_ranks, run_feature_selection, run_synthetic_ranks, run_throughput, top_set_share,
    throughput_stand_in, DatasetRanksConfig, DatasetRanksReport, ExperimentKind,
    FeatureSelectionConfig, FeatureSelectionReport, RowFilter, SyntheticRanksConfig,
    SyntheticRanksReport, ThroughputConfig, FamilyRanks,
};
pub use metrics::{f1_score, DetectionMetrics};
pub use selection::{feature_selection_sweep, FeatureSelectionCurve, SelectionConfig, SelectionPoint};
pub use throughput::{throughput_benchmark, ThroughputPoint, ThroughputReport};
