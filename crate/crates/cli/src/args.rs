use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shrinkrel::Method;

#[derive(Debug, Parser)]
#[command(
    name = "shrinkrel",
    version,
    about = "Shrinkage estimation of coherent-system reliability"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one dataset from a scenario config.
    Simulate(SimulateArgs),
    /// Estimate the system reliability curve from a dataset.
    Estimate(EstimateArgs),
    /// Select the shrinkage coefficient and export its risk profile.
    Cstar(CstarArgs),
    /// Run a Monte Carlo scenario or sweep and write the summary table.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub structure: String,
    /// system-ple, plugin, shrink-analytic or shrink-bootstrap.
    #[arg(long)]
    pub method: Method,
    /// Shrinkage exponent for the plug-in.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectorArg {
    Analytic,
    Bootstrap,
}

#[derive(Debug, Args)]
pub struct CstarArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub structure: String,
    #[arg(long, value_enum)]
    pub method: SelectorArg,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BootArgs {
    /// Bootstrap resamples.
    #[arg(long)]
    pub boot_reps: Option<usize>,
    /// Candidate grid `LO:HI:STEP`. For the analytic selector, the points
    /// at which the risk profile is reported.
    #[arg(long)]
    pub grid: Option<String>,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}
