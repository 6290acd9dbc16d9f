use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const LAMBDA_GRID: &str = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";

#[derive(Debug, Parser)]
#[command(
    name = "aordaz",
    version,
    about = "Risk-ratio approximation with the Aranda-Ordaz link family"
)]
pub struct Cli {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Write output here instead of standard output
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// RR, OR, CLR, WR(lambda) and B(lambda) for one pair of risks
    Measures(MeasuresArgs),
    /// WR(lambda) and B(lambda) along a fixed risk ratio
    Curve(CurveArgs),
    /// Fit a binary GLM with link log W_lambda to a CSV file
    Fit(FitArgs),
    /// Monte Carlo study of exp(beta1) in two-arm trials
    Simulate(SimulateArgs),
    /// Grid check of the sign law, monotonicity in lambda, and CLR vs OR
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct MeasuresArgs {
    /// Risk without exposure
    #[arg(long, allow_negative_numbers = true)]
    pub p0: f64,
    /// Risk with exposure
    #[arg(long, allow_negative_numbers = true)]
    pub p1: f64,
    /// Comma-separated lambdas in [0,1]; `cloglog` and `logit` stand for 0 and 1
    #[arg(long, default_value = LAMBDA_GRID)]
    pub lambdas: String,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Fixed risk ratio p1 / p0
    #[arg(long, allow_negative_numbers = true)]
    pub rr: f64,
    #[arg(long, default_value = "0,0.5,1")]
    pub lambdas: String,
    /// Spacing of the p0 grid
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with a header row; `-` reads standard input
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the 0/1 outcome column
    #[arg(long)]
    pub outcome: String,
    /// Name of the 0/1 exposure column
    #[arg(long)]
    pub exposure: String,
    /// Comma-separated covariate column names
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Link parameter in [0,1], or `cloglog` / `logit`
    #[arg(long, default_value = "cloglog")]
    pub lambda: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    /// Confidence level of the Wald intervals
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Subjects per arm
    #[arg(long)]
    pub n: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub p0: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub rr: f64,
    #[arg(long, default_value = LAMBDA_GRID)]
    pub lambdas: String,
    #[arg(long)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Worker threads; results do not depend on this
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 10)]
    pub lambda_steps: usize,
}
