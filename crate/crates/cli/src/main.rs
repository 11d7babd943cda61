//! `vdwgrating`: simulate transmission-grating diffraction scans, extract
//! order intensities, and fit effective slit widths, C3 and the
//! C3–polarizability line.
//!
//! Exit status: 0 success, 2 usage, 3 parse/validation/input errors,
//! 4 numerical non-convergence.

mod alpha;
mod c3;
mod common;
mod files;
mod simulate;
mod slit;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vdw_core::Error;

#[derive(Parser, Debug)]
#[command(name = "vdwgrating", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic angular scans from configuration files
    Simulate(simulate::SimulateArgs),
    /// Extract background-subtracted peak areas from scans
    Extract(slit::SlitArgs),
    /// Fit the effective slit (s_eff, delta, sigma) to each scan
    FitSlit(slit::SlitArgs),
    /// Fit C3 (and s0) to an effective-width table, with the wedge-angle systematic
    FitC3(c3::C3Args),
    /// Fit C3 against polarizability
    AlphaFit(alpha::AlphaArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::NonConvergence { .. } | Error::Quadrature { .. } => 4,
                _ => 3,
            };
        }
    }
    3
}

/// Runs one subcommand; `Ok(false)` means outputs were written but a fit
/// did not converge.
fn execute(command: &Command) -> anyhow::Result<bool> {
    match command {
        Command::Simulate(a) => simulate::run(a),
        Command::Extract(a) => slit::run_extract(a),
        Command::FitSlit(a) => slit::run_fit(a),
        Command::FitC3(a) => c3::run(a),
        Command::AlphaFit(a) => alpha::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: at least one fit did not converge; outputs were written");
            ExitCode::from(4)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
