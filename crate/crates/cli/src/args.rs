use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "kronmle",
    version,
    about = "Kronecker-covariance MLE for the matrix normal model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the flip-flop algorithm on a sample file.
    Fit(FitArgs),
    /// Sample-size thresholds for one shape, or the full table as CSV.
    Threshold(ThresholdArgs),
    /// The weighted minimal-rank deficit for two samples, or its table.
    S2(S2Args),
    /// Minimal rank with a 0-1 witness, optionally checked on data.
    Minrank(MinrankArgs),
    /// Kronecker canonical form of a generic tall pencil.
    Canonical(InputArgs),
    /// Classify a pair of 2x2 observations and give the closed-form MLE.
    Classify2x2(InputArgs),
    /// Monte Carlo runs.
    #[command(subcommand)]
    Montecarlo(MonteCarlo),
    /// Write a sample file.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Sample file, `-` for stdin.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Write the per-iteration `iteration,g,delta` trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Objective and parameter tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// `csv` prints the trace instead of the report.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Random restarts for the dispersion test.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Start from a random SPD matrix drawn with this seed instead of I.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, required_unless_present = "table")]
    pub m1: Option<usize>,
    #[arg(long, required_unless_present = "table")]
    pub m2: Option<usize>,
    #[arg(long)]
    pub mean_unknown: bool,
    /// Both panels for all shapes up to this dimension, as CSV.
    #[arg(long, conflicts_with_all = ["m1", "m2"])]
    pub table: Option<usize>,
}

#[derive(Debug, Args)]
pub struct S2Args {
    #[arg(long, required_unless_present = "table")]
    pub m1: Option<usize>,
    #[arg(long, required_unless_present = "table")]
    pub m2: Option<usize>,
    /// All cells with `m1` up to this value, as CSV.
    #[arg(long, conflicts_with_all = ["m1", "m2"])]
    pub table: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MinrankArgs {
    #[arg(long)]
    pub m1: usize,
    #[arg(long)]
    pub m2: usize,
    #[arg(long)]
    pub k: usize,
    /// Also search the minimal rank numerically on this two-sample file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, env = "KRONMLE_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum MonteCarlo {
    /// Probability that `Y1^-1 Y2` has real eigenvalues for 2x2 Gaussian pairs.
    Eig2x2(McArgs),
    /// Outcome frequencies of the flip-flop fit on Gaussian samples.
    Threshold(McThresholdArgs),
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, env = "KRONMLE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct McThresholdArgs {
    #[arg(long)]
    pub m1: usize,
    #[arg(long)]
    pub m2: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, env = "KRONMLE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub m1: usize,
    #[arg(long)]
    pub m2: usize,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, env = "KRONMLE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// The canonical pair of the tall regime instead of a Gaussian draw.
    #[arg(long)]
    pub canonical: bool,
}
