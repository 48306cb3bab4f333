//! Command-line driver for the `clilm` toolkit.
//!
//! The `ilm` binary is a thin wrapper around [`run`]; everything here is also
//! usable in-process, which is how the integration tests drive it.

pub mod commands;
pub mod config;
pub mod experiment;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Invalid flag combination found after parsing. Maps to exit code 2 like
/// any other usage error.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<UsageError>().is_some() {
        EXIT_USAGE
    } else {
        EXIT_RUNTIME
    }
}

#[derive(Debug, Parser)]
#[command(name = "ilm", version, about = "Simulate and fit spatial individual-level epidemic models")]
pub struct Cli {
    /// Base random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an epidemic from the spatial ILM.
    Simulate(SimulateArgs),
    /// Convert an epidemic record to a binary table.
    Convert(ConvertArgs),
    /// Choose beta0 by profile likelihood over a grid.
    Tune(TuneArgs),
    /// Fit the spatial ILM or the conditional logistic ILM.
    Fit(FitArgs),
    /// Posterior predictive check of a fitted model.
    Ppc(PpcArgs),
    /// Run the two-stage simulation study.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameworkArg {
    Si,
    Sir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Identity,
    Log,
}

impl From<TransformArg> for clilm::Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::Identity => clilm::Transform::Identity,
            TransformArg::Log => clilm::Transform::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ilm,
    Clilm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Irls,
    Mle,
    Mcmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReferenceArg {
    Mean,
    Observed,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    /// Number of individuals placed uniformly on the square.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Side length of the square.
    #[arg(long, default_value_t = 10.0)]
    pub side: f64,
    /// Use this population CSV instead of sampling one.
    #[arg(long, conflicts_with_all = ["n", "side"])]
    pub population: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FrameworkArg::Si)]
    pub framework: FrameworkArg,
    /// Mean of the Poisson infectious period (SIR only).
    #[arg(long, default_value_t = 4.0)]
    pub period_mean: f64,
    #[arg(long, default_value_t = 20)]
    pub t_end: u32,
    /// Comma-separated ids infectious at t=1 (default: one at random).
    #[arg(long, value_delimiter = ',')]
    pub initial: Option<Vec<String>>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub population: PathBuf,
    #[arg(long)]
    pub epidemic: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub beta0: f64,
    #[arg(long, value_enum, default_value_t = TransformArg::Log)]
    pub transform: TransformArg,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `default`, `fmd`, or a comma list of values and start:stop:step ranges.
    #[arg(long, default_value = "default", allow_hyphen_values = true)]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = TransformArg::Log)]
    pub transform: TransformArg,
}

#[derive(Debug, Args)]
pub struct McmcArgs {
    #[arg(long, default_value_t = 50_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 10)]
    pub thin: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Mcmc)]
    pub method: MethodArg,
    #[arg(long)]
    pub population: Option<PathBuf>,
    #[arg(long)]
    pub epidemic: Option<PathBuf>,
    /// Binary table (logistic model); alternatively give the raw data and
    /// `--beta0`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta0: Option<f64>,
    #[arg(long, value_enum, default_value_t = TransformArg::Log)]
    pub transform: TransformArg,
    #[command(flatten)]
    pub mcmc: McmcArgs,
}

#[derive(Debug, Args)]
pub struct PpcArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub posterior: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Fixed spatial power of the logistic model.
    #[arg(long, allow_hyphen_values = true)]
    pub beta0: Option<f64>,
    #[arg(long, value_enum, default_value_t = TransformArg::Log)]
    pub transform: TransformArg,
    /// Default: SIR when the record has removal times.
    #[arg(long, value_enum)]
    pub framework: Option<FrameworkArg>,
    #[arg(long, default_value_t = 4.0)]
    pub period_mean: f64,
    #[arg(long, default_value_t = 500)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    pub band: f64,
    #[arg(long, value_enum, default_value_t = ReferenceArg::Mean)]
    pub reference: ReferenceArg,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Runs a parsed command line on a rayon pool sized by `--jobs`.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(UsageError("--jobs must be at least 1".into()).into());
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build()?;
    pool.install(|| commands::dispatch(&cli))
}
