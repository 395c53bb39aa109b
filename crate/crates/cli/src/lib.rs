//! The `mlat` command line: data generation, splitting, training, evaluation,
//! sensitivity sweeps, serving and the proposal pipeline behind one binary.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::Config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2 for bad input or usage, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Invalid(e.to_string())
            }
        })*
    };
}

invalid_from!(
    mlat_core::dataset::DatasetError,
    mlat_core::dataset::FeatureError,
    mlat_core::splits::SplitError,
    mlat_core::gbdt::GbdtError,
    mlat_core::metrics::MetricsError,
    mlat_core::sensitivity::SensitivityError,
    serde_json::Error
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "mlat", version, about = "Small-data deal pricing: model, evaluation, service and proposal pipeline")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print reports as JSON instead of text tables.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Gbdt,
    Ridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemaName {
    Research,
    Draft,
    TranscriptFacts,
    Score,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV; without it the configured synthetic dataset is generated.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HpArgs {
    /// Hyperparameter override, `name=value`; repeatable.
    #[arg(long = "hp", value_name = "NAME=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    /// Split plan JSON; without it the split is recomputed from seed and fraction.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use every record instead of the training partition.
    #[arg(long, conflicts_with = "split")]
    pub all: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset as CSV.
    GenData {
        /// Generator spec (JSON or TOML); keys not given keep their defaults.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        /// Overrides the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Emit the 70-record fixture with the reference group layout instead.
        #[arg(long, conflicts_with_all = ["spec", "n", "seed"])]
        layout_fixture: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-feature summary table.
    Summarize {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Group-aware train/test split plan with a leakage check.
    Split {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Group k-fold plan with a leakage check.
    Kfold {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        k: Option<usize>,
        /// Fold only the training side of this split plan.
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the gradient-boosted model on the training partition.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        partition: PartitionArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[arg(long)]
        out_model: Option<PathBuf>,
    },
    /// Cross-validation report for one model.
    Cv {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        partition: PartitionArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long, value_enum, default_value = "gbdt")]
        model: ModelKind,
        /// Ridge penalty.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Write the fold-by-fold metrics JSON here.
        #[arg(long)]
        metrics_out: Option<PathBuf>,
    },
    /// Boosted trees against ridge: CV plus held-out test metrics.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        test_fraction: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// CV with and without one raw feature.
    Ablate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        partition: PartitionArgs,
        #[command(flatten)]
        hp: HpArgs,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        drop: String,
    },
    /// Price curve over one feature with the others held at a baseline.
    Sensitivity {
        /// Model artifact; defaults to the pinned reference model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Baseline deal as inline JSON or a JSON file.
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long)]
        feature: String,
        /// Comma-separated increasing values (defaults: 1..5 for scores, all stacks).
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Write the curve as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the pricing service until interrupted.
    Serve {
        /// Model artifact; defaults to the pinned reference model.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        bind: Option<String>,
    },
    /// Transcript to rendered proposal through both agents.
    Pipeline {
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Scripted LLM outputs; without it the configured external model is used.
        #[arg(long)]
        mock_fixtures: Option<PathBuf>,
        #[arg(long)]
        research_stubs: Option<PathBuf>,
        /// Running pricing service, e.g. http://127.0.0.1:8000.
        #[arg(long, conflicts_with = "model")]
        pricing_url: Option<String>,
        /// Model artifact for in-process pricing; defaults to the pinned model.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        template: Option<PathBuf>,
        /// Output directory for proposal.txt, proposal.json, findings.json and trace.jsonl.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print an embedded JSON schema.
    Schema {
        #[command(subcommand)]
        action: SchemaAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum SchemaAction {
    Dump {
        #[arg(value_enum)]
        name: SchemaName,
    },
}

/// Run a parsed command line, returning what should go to stdout.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    commands::dispatch(cli.command, &config, cli.json)
}
