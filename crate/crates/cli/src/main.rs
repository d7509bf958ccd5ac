//! `ar1dp` command-line front end: simulate scenario panels, fit the dynamic
//! mixture model and summarise stored traces.

mod commands;
mod config;
mod data;
mod error;
mod trace_io;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable consulted for the output directory when neither the
/// command line nor the configuration names one.
pub const OUTPUT_DIR_ENV: &str = "AR1DP_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "ar1dp-output";

#[derive(Debug, Parser)]
#[command(name = "ar1dp", version, about = "Autoregressive Dirichlet process mixtures for panel data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one of the seven simulation scenarios as a long-format CSV.
    Simulate {
        /// Scenario id (1-7).
        #[arg(long)]
        scenario: u8,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV path; defaults to `scenario<id>_seed<seed>.csv` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of units (default 100).
        #[arg(long)]
        units: Option<usize>,
        /// Number of time points (default depends on the scenario).
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Run MCMC for the model described by a TOML configuration file.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the configuration file.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of independent chains; chain i uses seed + i.
        #[arg(long, default_value_t = 1)]
        chains: usize,
        /// Worker threads shared by chains and particles (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long, value_enum, default_value_t = trace_io::TraceFormat::Binary)]
        trace_format: trace_io::TraceFormat,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Suppress progress messages.
        #[arg(long)]
        quiet: bool,
    },
    /// Derive summaries from a stored trace.
    Summarize {
        /// Trace sidecar (`trace.json`) written by `fit`.
        #[arg(long)]
        trace: PathBuf,
        /// Summaries to produce; may be repeated.
        #[arg(long, value_enum, required = true)]
        what: Vec<What>,
        /// Data file; defaults to the one recorded in the trace.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output directory; defaults to the directory of the trace.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Points in each predictive grid.
        #[arg(long, default_value_t = ar1dp::summaries::DEFAULT_GRID_POINTS)]
        grid_points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    Coclust,
    Binder,
    Labels,
    Predictive,
    PsiPosterior,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            seed,
            out,
            units,
            horizon,
        } => commands::simulate(scenario, seed, out, units, horizon),
        Command::Fit {
            config,
            seed,
            chains,
            threads,
            trace_format,
            out_dir,
            quiet,
        } => commands::fit(&commands::FitArgs {
            config,
            seed,
            chains,
            threads,
            trace_format,
            out_dir,
            quiet,
        }),
        Command::Summarize {
            trace,
            what,
            data,
            out_dir,
            grid_points,
        } => commands::summarize(&trace, &what, data, out_dir, grid_points),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
