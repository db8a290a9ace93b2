//! `swmparc`: generate synthetic data, train, evaluate and parcellate.
//!
//! Exit codes: 0 on success, 1 on internal or numerical failure, 2 on bad
//! usage or bad input.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "swmparc", version, about = "Streamline parcellation with a point-cloud encoder")]
struct Cli {
    /// TOML or JSON file with `seed`, `[gen]`, `[train]` and `[arch]` sections.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic train/val/test corpus with a manifest.
    GenData(GenArgs),
    /// Run contrastive pretraining and/or classifier training.
    Train(TrainArgs),
    /// Print accuracy, macro F1 and optionally CIR for a labeled set.
    Eval(EvalArgs),
    /// Label every streamline of an SLP file.
    Parcellate(ParcellateArgs),
    /// Multiply-accumulate count of one inference pass per streamline.
    Flops(FlopsArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub per_cluster: Option<usize>,
    #[arg(long)]
    pub outlier_fraction: Option<f64>,
    #[arg(long)]
    pub outlier_scale: Option<f64>,
    #[arg(long)]
    pub confusable_pairs: Option<usize>,
    /// Per-coordinate point noise σ in mm.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub endpoint_jitter: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Scl,
    Cls,
    Both,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory from `gen-data`; uses train.slp and, when present, val.slp.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["train_slp", "train_labels"])]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "train_labels")]
    pub train_slp: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "train_slp")]
    pub train_labels: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "val_labels")]
    pub val_slp: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "val_slp")]
    pub val_labels: Option<PathBuf>,
    /// Directory for the checkpoint and the JSON report.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = PhaseArg::Both)]
    pub phase: PhaseArg,
    /// Phase-1 checkpoint to start from with `--phase cls`
    /// (default: OUT/model.ckpt).
    #[arg(long, value_name = "PATH")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of classes (default: inferred from the labels).
    #[arg(long)]
    pub arch_k: Option<usize>,
    /// Points per resampled streamline.
    #[arg(long)]
    pub arch_n: Option<usize>,
    #[arg(long)]
    pub lr_scl: Option<f64>,
    #[arg(long)]
    pub lr_cls: Option<f64>,
    #[arg(long)]
    pub batch_scl: Option<usize>,
    #[arg(long)]
    pub batch_cls: Option<usize>,
    #[arg(long)]
    pub epochs_scl: Option<usize>,
    #[arg(long)]
    pub epochs_cls: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Held-out share of the training set when no validation set is given.
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub no_shuffle: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub slp: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub labels: PathBuf,
    /// Cluster ids expected in the subject, whitespace or comma separated.
    #[arg(long, value_name = "PATH")]
    pub expected_clusters: Option<PathBuf>,
    /// Predicted streamlines needed to count a cluster as identified.
    #[arg(long, default_value_t = swmparc::metrics::DEFAULT_CIR_THRESHOLD)]
    pub cir_threshold: usize,
    /// Also write the JSON report here.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParcellateArgs {
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub slp: PathBuf,
    /// Directory for labels.csv and summary.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// 4x4 row-major affine (16 numbers) applied before classification.
    #[arg(long, value_name = "PATH")]
    pub affine: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct FlopsArgs {
    #[arg(long, visible_alias = "k")]
    pub arch_k: Option<usize>,
    #[arg(long, visible_alias = "n")]
    pub arch_n: Option<usize>,
    /// Estimate the cost with PointNet-style input and feature T-nets added.
    #[arg(long)]
    pub with_tnets: bool,
}

/// A command failure with its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Lib(swmparc::Error),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Lib(e) if e.is_input_error() => 2,
            Failure::Lib(_) => 1,
        }
    }
}

impl From<swmparc::Error> for Failure {
    fn from(e: swmparc::Error) -> Self {
        Failure::Lib(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => f.write_str(msg),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SUPWMA_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = config::FileConfig::load_opt(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::GenData(a) => commands::gen_data(&a, &file),
        Command::Train(a) => commands::train(&a, &file),
        Command::Eval(a) => commands::eval(&a),
        Command::Parcellate(a) => commands::parcellate(&a),
        Command::Flops(a) => commands::flops(&a, &file),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
