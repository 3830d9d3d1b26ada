use std::net::SocketAddr;
use std::path::PathBuf;

use acme_ad::evaluation::ExperimentKind;
use acme_ad::explainer::Weights;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "acme-ad", version, about = "Explain anomaly detectors by quantile perturbation")]
pub struct Cli {
    /// Worker threads for explanation fan-out (default: available parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an isolation forest and save it with its threshold and score map.
    Train(TrainArgs),
    /// Explain rows of a dataset with a saved model.
    Explain(ExplainArgs),
    /// Run an evaluation experiment and write its report.
    Experiment(ExperimentArgs),
    /// Export the quantile grid of a dataset as JSON.
    Grid(GridArgs),
    /// Write the ring benchmark's training and test sets as CSV.
    Synth(SynthArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

/// Where to read a dataset and which columns are not features.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Column holding 0/1 ground truth (1 = anomalous).
    #[arg(long)]
    pub label: Option<String>,
    /// Columns to carry along as metadata instead of features.
    #[arg(long = "meta", value_delimiter = ',')]
    pub meta: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ForestArgs {
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Subsample size per tree.
    #[arg(long, default_value_t = 256)]
    pub psi: usize,
    /// Expected outlier fraction; sets the threshold at the matching score quantile.
    #[arg(long, default_value_t = 0.10, conflicts_with = "threshold")]
    pub contamination: f64,
    /// Fixed raw-score threshold instead of a contamination quantile.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset that defines the quantile grid (default: --data).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Zero-based rows to explain.
    #[arg(long, value_delimiter = ',', conflicts_with = "anomalies_only")]
    pub rows: Vec<usize>,
    /// Explain every predicted anomaly (the default when --rows is absent).
    #[arg(long)]
    pub anomalies_only: bool,
    #[arg(long, default_value_t = 70)]
    pub quantiles: usize,
    /// Sub-score weights as wD,wC,wQ,wR.
    #[arg(long, default_value_t = Weights::default())]
    pub weights: Weights,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// One of: synthetic-ranks, dataset-ranks, feature-selection, throughput.
    pub name: ExperimentKind,
    /// Input dataset; synthetic data is generated when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long = "meta", value_delimiter = ',')]
    pub meta: Vec<String>,
    /// Dataset name used in report file names (default: file stem or "synthetic").
    #[arg(long)]
    pub dataset_name: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long, default_value_t = 256)]
    pub psi: usize,
    #[arg(long, default_value_t = 0.10, conflicts_with = "threshold")]
    pub contamination: f64,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value_t = 70)]
    pub quantiles: usize,
    #[arg(long, default_value_t = Weights::default())]
    pub weights: Weights,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restrict dataset-ranks to rows whose meta column matches, as column=value.
    #[arg(long)]
    pub subset: Option<String>,
    /// Model instances aggregated by feature-selection.
    #[arg(long, default_value_t = 5)]
    pub instances: usize,
    /// Retrains per subset size in feature-selection.
    #[arg(long, default_value_t = 50)]
    pub retrains: usize,
    /// Percentages of the anomaly set timed by throughput.
    #[arg(long, value_delimiter = ',', default_value = "20,40,60,80,100")]
    pub fractions: Vec<f64>,
    /// Exit with status 1 when the experiment misses its acceptance threshold.
    #[arg(long)]
    pub check: bool,
    /// Output directory for the JSON and CSV reports.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 70)]
    pub quantiles: usize,
    /// JSON file to write (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 6)]
    pub features: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.10)]
    pub contamination: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for train.csv and test.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Listen address.
    #[arg(long, env = "ACME_AD_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}
