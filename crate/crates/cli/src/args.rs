use std::path::PathBuf;

use bracket_exact::data_io::OutputFormat;
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "bracket-exact",
    version,
    about = "Exact winning and round-reach probabilities for group stage plus knockout tournaments"
)]
pub struct Cli {
    /// Tournament config file, or a bundled config name (men-2022, women-2023)
    #[arg(long, global = true, value_name = "FILE|NAME")]
    pub config: Option<String>,

    /// Override the config's sensitivity scale
    #[arg(long, global = true)]
    pub sigma: Option<f64>,

    /// Override the config's schedule (built-in name or descriptor file)
    #[arg(long, global = true, value_name = "NAME|FILE")]
    pub schedule: Option<String>,

    /// Extra fixed results, one `stage,team_a,team_b,result` per line
    #[arg(long, global = true, value_name = "FILE")]
    pub overrides: Option<PathBuf>,

    /// Output format: table or json-lines
    #[arg(long, global = true, default_value = "table")]
    pub format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact championship and round-reach probabilities
    Compute,

    /// Monte Carlo estimate of the same probabilities
    Simulate {
        #[arg(long, default_value_t = 100_000)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },

    /// Simulation error against the exact result over a grid of run counts
    Compare {
        /// Comma-separated run counts (default: 100 to 100000, log-spaced)
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Do not time the exact computation
        #[arg(long)]
        skip_timing: bool,
    },

    /// Time exact computation against single-threaded simulation
    Bench {
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Simulation runs per timing repetition
        #[arg(long, default_value_t = 1_000)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },

    /// Fit sigma to championship odds by grid search
    Calibrate {
        /// CSV with `team,decimal_odds`
        #[arg(long)]
        odds: PathBuf,
        /// `start:stop:step` or a comma-separated list
        #[arg(long, default_value = "100:600:10")]
        sigma_grid: String,
    },

    /// The single most likely complete bracket
    Bracket,

    /// Local HTTP API for what-if recomputation
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },

    /// Export the group ranking table as CSV
    RankingTable {
        #[arg(long, default_value_t = 4)]
        group_size: usize,
        /// Permit six-team groups
        #[arg(long)]
        allow_large_groups: bool,
    },
}
