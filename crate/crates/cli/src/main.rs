//! `fracsrc`: batch front end for the fractional source-problem toolkit.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::Solver;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracsrc", version, about = "Forward and inverse solvers for time-fractional diffusion with singular sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate E_{alpha,beta}(-x) on [0, xmax] as CSV.
    Ml {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        xmax: f64,
        #[arg(long)]
        n: usize,
        /// Output file; standard output when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Solve the forward problem and write the field and the transformed source.
    Forward {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = Solver::Spectral)]
        solver: Solver,
    },
    /// Write g = J_beta mu.
    Transform {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recover the spatial factor from subdomain observations.
    InvertF {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recover the temporal factor from point observations.
    InvertMu {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the acceptance suite and write a pass/fail JSON report.
    Report {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Selftest,
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("FRACSRC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("FRACSRC_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version go to stdout with status 0, usage errors to stderr with 2
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Ml { alpha, beta, xmax, n, output } => commands::ml(alpha, beta, xmax, n, output.as_deref()).map(|_| true),
        Command::Forward { config, solver } => commands::forward(&config, solver).map(|_| true),
        Command::Transform { config } => commands::transform(&config).map(|_| true),
        Command::InvertF { config } => commands::invert_f(&config).map(|_| true),
        Command::InvertMu { config } => commands::invert_mu(&config).map(|_| true),
        // a report with failing criteria is still a complete report
        Command::Report { seed, output } => commands::report(seed, output.as_deref()).map(|_| true),
        Command::Selftest => commands::selftest(),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
