//! Command-line front end binding the measurement-analysis pipeline:
//! split, de-embed, compose, identify, localize, track, simulate, report.
//!
//! Exit codes: 0 success, 1 validation/input error, 2 numerical failure.
//! Diagnostics go to standard error; data goes to files or standard
//! output.

mod commands;
mod globber;
mod flags;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::CliError;

#[derive(Parser)]
#[command(
    name = "polemap",
    version,
    about = "Closed-loop response reconstruction and pole tracking for amplifier stability analysis"
)]
struct Cli {
    /// Reference/source impedance in ohms, used wherever an impedance
    /// reference enters the math. Network files carry their own z0; a
    /// mismatch is reported on standard error.
    #[arg(long, global = true, default_value_t = 50.0)]
    z0: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a symmetric 2x test device into one half (input-block
    /// extraction by ABCD bisection).
    Split2x(commands::Split2xArgs),
    /// Compute the generator-to-reference transfer H_input from the
    /// input-block S-parameters and the measured input reflection.
    Hinput(commands::HinputArgs),
    /// Form H_n from probe ratio measurements and compose
    /// H_vn = H_input * H_n.
    Compose(commands::ComposeArgs),
    /// Fit a rational model to one response and report its poles.
    Identify(commands::IdentifyArgs),
    /// Fit several responses with shared poles (common-denominator
    /// identification).
    Mimo(commands::MimoArgs),
    /// Normalized residue comparison of the critical pole across the
    /// responses of a fitted model.
    Residues(commands::ResiduesArgs),
    /// Fit a family of swept responses and track poles across the sweep.
    Track(commands::TrackArgs),
    /// Synthesize a complete measurement set from a built-in circuit.
    Simulate(commands::SimulateArgs),
    /// Exact circuit poles from the built-in simulator's matrix pencil.
    Exactpoles(commands::ExactpolesArgs),
    /// Re-emit report/SVG views from a saved track document.
    Report(commands::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Split2x(args) => commands::split2x(&args, cli.z0),
        Command::Hinput(args) => commands::hinput(&args, cli.z0),
        Command::Compose(args) => commands::compose(&args),
        Command::Identify(args) => commands::identify(&args),
        Command::Mimo(args) => commands::mimo(&args),
        Command::Residues(args) => commands::residues(&args),
        Command::Track(args) => commands::track(&args),
        Command::Simulate(args) => commands::simulate(&args, cli.z0),
        Command::Exactpoles(args) => commands::exactpoles(&args, cli.z0),
        Command::Report(args) => commands::report(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
