//! `atomlink`: run, sweep, fit, analyze and calibrate the link simulator.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input, 3 runtime failure.

mod analyze;
mod calibrate;
mod fit;
mod output;
mod run;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "atomlink", version, about = "Atomic-ensemble quantum-network link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the commands that write files.
#[derive(clap::Args, Debug)]
struct OutArgs {
    /// Output directory.
    #[arg(long, env = "ATOMLINK_OUT", default_value = "atomlink-out")]
    out: PathBuf,
}

/// Overrides applied on top of a loaded configuration.
#[derive(clap::Args, Debug)]
struct RunOverrides {
    /// Master seed; replaces `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trials; replaces `run.trials` and `run.duration_s`.
    #[arg(long, conflicts_with = "duration_s")]
    trials: Option<u64>,
    /// Simulated laboratory time, s; replaces `run.trials` and `run.duration_s`.
    #[arg(long)]
    duration_s: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a session and write trials, events, histograms, fringes and a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Repeat a run over values of one parameter and tabulate fidelity and SNR.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: sweep::Axis,
        /// Comma-separated values; may be empty.
        #[arg(long, default_value = "", allow_hyphen_values = true, value_parser = sweep::parse_values)]
        values: sweep::Values,
        #[command(flatten)]
        overrides: RunOverrides,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit a model to a CSV dataset and write a JSON report.
    Fit {
        #[arg(value_enum)]
        kind: FitKind,
        /// CSV file in the schema of `kind` (see docs/formats.md).
        data: PathBuf,
        /// Dark-count anchor for the SNR fit, counts/s.
        #[arg(long, default_value_t = 38.0)]
        r_dark: f64,
        /// Crystal length for the DFG fit, mm.
        #[arg(long)]
        crystal_mm: Option<f64>,
        /// Starting (or fixed) fringe period, in setting units.
        #[arg(long, default_value_t = 90.0)]
        period: f64,
        /// Hold the fringe period at `--period`.
        #[arg(long)]
        fixed_period: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Refit the fringes of a trials table written by `run`.
    Analyze {
        /// Configuration the trials were simulated with.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fix the free noise and efficiency parameters against the reference measurements.
    Calibrate {
        /// Base configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    Snr,
    Decay,
    Dfg,
    Fringe,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run { config, overrides, out } => run::run(&config, &overrides, &out.out),
        Command::Sweep { config, axis, values, overrides, out } => {
            sweep::sweep(&config, axis, &values.0, &overrides, &out.out)
        }
        Command::Fit { kind, data, r_dark, crystal_mm, period, fixed_period, out } => {
            fit::fit(kind, &data, &fit::FitOptions { r_dark, crystal_mm, period, fixed_period }, &out.out)
        }
        Command::Analyze { config, trials, out } => analyze::analyze(&config, &trials, &out.out),
        Command::Calibrate { config, out } => calibrate::calibrate(config.as_deref(), &out.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
