//! `heartcbr` command-line tool.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use heartcbr::{SimilarityConfig, ValidationMode, NUM_ATTRIBUTES};

#[derive(Debug, Parser)]
#[command(name = "heartcbr", version, about = "Case-based heart disease prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split a dataset into train/test CSVs and persist the case base.
    Split(SplitArgs),
    /// Predict one query case against a case base.
    Predict(Box<PredictArgs>),
    /// Evaluate the test split and write a JSON report plus per-case CSV.
    Evaluate(EvalArgs),
    /// Write descriptive tables for true and predicted labels.
    Stats(EvalArgs),
    /// Write the 14x14 Pearson correlation matrix.
    Correlate(CorrelateArgs),
    /// Train the 13-3-2 neural network baseline.
    TrainNn(TrainNnArgs),
    /// Split, evaluate (frozen and incremental), stats and correlate.
    RunAll(EvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Reject out-of-domain `ca` and `thal` values instead of warning.
    #[arg(long)]
    pub strict: bool,
}

impl InputArgs {
    pub fn mode(&self) -> ValidationMode {
        if self.strict {
            ValidationMode::Strict
        } else {
            ValidationMode::Lenient
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SplitOpts {
    #[command(flatten)]
    pub input: InputArgs,
    /// Fraction of rows, in file order, used for training.
    #[arg(long, default_value_t = 0.6, value_parser = parse_fraction)]
    pub train_fraction: f64,
    /// Directory for output files; created if missing.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub split: SplitOpts,
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// 13 comma-separated attribute weights (default all 1).
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<SimilarityConfig>,
}

impl WeightArgs {
    pub fn config(&self) -> SimilarityConfig {
        self.weights.clone().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub split: SplitOpts,
    #[command(flatten)]
    pub weights: WeightArgs,
    /// Retain each test case with its predicted target before the next query.
    #[arg(long)]
    pub incremental_retain: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Directory for output files; created if missing.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainNnArgs {
    #[command(flatten)]
    pub split: SplitOpts,
    /// Seed for the initial weights.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Passes over the training split (at least 1).
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    /// Learning rate.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
}

#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub age: Option<String>,
    #[arg(long)]
    pub sex: Option<String>,
    #[arg(long)]
    pub cp: Option<String>,
    #[arg(long)]
    pub trestbps: Option<String>,
    #[arg(long)]
    pub chol: Option<String>,
    #[arg(long)]
    pub fbs: Option<String>,
    #[arg(long)]
    pub restecg: Option<String>,
    #[arg(long)]
    pub thalach: Option<String>,
    #[arg(long)]
    pub exang: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub oldpeak: Option<String>,
    #[arg(long)]
    pub slope: Option<String>,
    #[arg(long)]
    pub ca: Option<String>,
    #[arg(long)]
    pub thal: Option<String>,
}

impl QueryArgs {
    pub fn fields(&self) -> [(&'static str, &Option<String>); NUM_ATTRIBUTES] {
        [
            ("age", &self.age),
            ("sex", &self.sex),
            ("cp", &self.cp),
            ("trestbps", &self.trestbps),
            ("chol", &self.chol),
            ("fbs", &self.fbs),
            ("restecg", &self.restecg),
            ("thalach", &self.thalach),
            ("exang", &self.exang),
            ("oldpeak", &self.oldpeak),
            ("slope", &self.slope),
            ("ca", &self.ca),
            ("thal", &self.thal),
        ]
    }

    pub fn any_set(&self) -> bool {
        self.fields().iter().any(|(_, v)| v.is_some())
    }
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Persisted case-base CSV; its normalization sidecar is `<stem>.norm.json`.
    #[arg(long, conflicts_with_all = ["input", "train_fraction"])]
    pub case_base: Option<PathBuf>,
    /// Build the case base from the training split of this dataset instead.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Training fraction used with --input (default 0.6).
    #[arg(long, value_parser = parse_fraction)]
    pub train_fraction: Option<f64>,
    /// Single-row CSV holding the query.
    #[arg(long)]
    pub query_csv: Option<PathBuf>,
    #[command(flatten)]
    pub query: QueryArgs,
    #[command(flatten)]
    pub weights: WeightArgs,
    /// Append the solved query to the case base and refresh the sidecar.
    #[arg(long, requires = "case_base")]
    pub retain: bool,
    /// Reject out-of-domain `ca` and `thal` values instead of warning.
    #[arg(long)]
    pub strict: bool,
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let f: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if f > 0.0 && f < 1.0 {
        Ok(f)
    } else {
        Err(format!("must lie strictly between 0 and 1, got {f}"))
    }
}

fn parse_weights(s: &str) -> Result<SimilarityConfig, String> {
    let values = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    SimilarityConfig::from_slice(&values).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Split(a) => commands::split(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Stats(a) => commands::stats(&a),
        Command::Correlate(a) => commands::correlate(&a),
        Command::TrainNn(a) => commands::train_nn(&a),
        Command::RunAll(a) => commands::run_all(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
