use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandKind {
    /// Maximize the sum throughput (closed form)
    SolveSum,
    /// Maximize the common (max-min) throughput
    SolveCommon,
    /// Maximize a weighted sum of user throughputs
    SolveWeighted,
    /// Maximize the sum throughput under a per-user rate profile
    SolveProfile,
    /// Sweep throughput weights to trace the achievable-rate boundary
    Region,
    /// Monte Carlo comparison of allocation schemes over fading draws
    Simulate,
    /// Monte Carlo comparison across pathloss exponents
    SweepAlpha,
    /// Monte Carlo comparison across user counts
    SweepUsers,
    /// Conventional fixed-energy TDMA baseline allocation
    BaselineTdma,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::SolveSum => "solve-sum",
            CommandKind::SolveCommon => "solve-common",
            CommandKind::SolveWeighted => "solve-weighted",
            CommandKind::SolveProfile => "solve-profile",
            CommandKind::Region => "region",
            CommandKind::Simulate => "simulate",
            CommandKind::SweepAlpha => "sweep-alpha",
            CommandKind::SweepUsers => "sweep-users",
            CommandKind::BaselineTdma => "baseline-tdma",
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "wpcn",
    about = "Downlink-energy / uplink-information time allocation for wireless powered networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CommandKind,
    /// Flat key-value configuration file (TOML, or the JSON output of a
    /// previous run)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// Override the configured random seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the configured trial count
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Suppress progress notes on stderr
    #[arg(long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Extra progress notes on stderr
    #[arg(long, global = true)]
    verbose: bool,
}

/// Everything one invocation needs: the command, where its inputs and
/// outputs live, and the overrides to apply.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: CommandKind,
    pub config_path: PathBuf,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub seed_override: Option<u64>,
    pub trials_override: Option<usize>,
    /// -1 quiet, 0 normal, 1 verbose
    pub verbosity: i8,
}

pub fn parse() -> Result<RunManifest, String> {
    let cli = Cli::parse();
    let config_path = cli
        .config
        .ok_or_else(|| "--config PATH is required".to_string())?;
    Ok(RunManifest {
        command: cli.command,
        config_path,
        output_path: cli.out,
        output_format: cli.format,
        seed_override: cli.seed,
        trials_override: cli.trials,
        verbosity: if cli.quiet {
            -1
        } else if cli.verbose {
            1
        } else {
            0
        },
    })
}
