//! `jointq`: generate synthetic streams, track quantiles, run RMSE
//! benchmarks and detect changes in accelerometer recordings.
//!
//! Settings come from flags, then the matching section of `--config`, then
//! built-in defaults. Exit status: 0 success, 2 usage, 3 bad input data,
//! 4 constraint violation, 5 output failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jointq::detect::DetectorMethod;
use jointq::joint::TrackerKind;
use jointq::streams::{Family, Variant};

use config::{Format, TimeUnit};

#[derive(Debug, Parser)]
#[command(name = "jointq", version, about = "Joint tracking of multiple quantiles in data streams")]
pub struct Cli {
    /// TOML file with [gen], [track], [sweep], [bench], [detect] and [score] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic stream as CSV.
    Gen(GenArgs),
    /// Track quantiles of a stream read from a file or standard input.
    Track(TrackArgs),
    /// RMSE against lambda for one tracker on one stream.
    Sweep(SweepArgs),
    /// Optimal-lambda RMSE tables over streams, grids and trackers.
    Bench(BenchArgs),
    /// Detect activity changes in an accelerometer CSV.
    Detect(DetectArgs),
    /// Precision, recall and F1 of detections against true changes.
    Score(ScoreArgs),
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    #[arg(long)]
    family: Option<Family>,
    #[arg(long)]
    variant: Option<Variant>,
    /// Mean amplitude (normal) or scale of the degrees of freedom (chi-square).
    #[arg(long)]
    a: Option<f64>,
    /// Degrees-of-freedom offset (chi-square).
    #[arg(long)]
    b: Option<f64>,
    /// Period T of the parameter cycle.
    #[arg(long = "T", visible_alias = "period")]
    period: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    stream: StreamArgs,
    /// Number of samples.
    #[arg(long)]
    n: Option<u64>,
    /// Append true quantile columns for these probabilities.
    #[arg(long, value_delimiter = ',')]
    truth: Option<Vec<f64>>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrackerArgs {
    #[arg(long)]
    tracker: Option<TrackerKind>,
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    #[arg(long)]
    gamma: Option<f64>,
    /// rho as a fraction of lambda.
    #[arg(long)]
    rho_ratio: Option<f64>,
    /// Constant added before multiplicative updates (ShiftQ, MDUMIQE, parallel DUMIQE).
    #[arg(long)]
    offset: Option<f64>,
    /// Samples used to initialise the estimates.
    #[arg(long)]
    init_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Stream CSV; `-` or absent reads standard input.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[command(flatten)]
    tracker: TrackerArgs,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LambdaGridArgs {
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    per_decade: Option<usize>,
    /// Scored steps after warmup.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    stream: StreamArgs,
    #[command(flatten)]
    tracker: TrackerArgs,
    #[command(flatten)]
    grid: LambdaGridArgs,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<Family>>,
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    periods: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    trackers: Option<Vec<TrackerKind>>,
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    #[command(flatten)]
    grid: LambdaGridArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Accelerometer CSV with rows `user,activity,timestamp,x,y,z`.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long)]
    method: Option<DetectorMethod>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    rho_ratio: Option<f64>,
    /// EWMA rate of the moment detector.
    #[arg(long)]
    nu: Option<f64>,
    /// EWMA rate of the statistic's moments.
    #[arg(long)]
    xi: Option<f64>,
    /// Look-back horizon in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Threshold in standard deviations.
    #[arg(long)]
    eta: Option<f64>,
    /// Nominal samples per second.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    #[arg(long)]
    offset: Option<f64>,
    #[arg(long, value_enum)]
    timestamp_unit: Option<TimeUnit>,
    /// Skip malformed rows instead of failing.
    #[arg(long)]
    skip_bad_rows: bool,
    #[arg(long)]
    user: Option<String>,
    /// Detections as JSON lines.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Also write the label-change times as JSON lines.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error::CliError::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jointq: {e}");
            e.exit_code()
        }
    }
}
