//! `ricci-lab`: verification battery, flow runs, King–Rosenau experiments
//! and convergence sweeps for Ricci flow on the 2-sphere.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{classify, Exit};
use config::{Flags, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "ricci-lab",
    version,
    about = "Ricci flow on S² through the pressure v, with g = g_round / v"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the residual battery and write the JSON report.
    Verify(Flags),
    /// Integrate the flow and write the time-series CSV.
    Flow(Flags),
    /// Compare the flow of King–Rosenau data with the coefficient ODE.
    Kr(Flags),
    /// Q-equation residual of frozen data over a list of band limits.
    Convergence(Flags),
}

fn main() -> ExitCode {
    // Clap exits with status 2 on malformed arguments, matching config errors.
    let cli = Cli::parse();
    let (flags, run): (_, fn(&RunConfig) -> sphere_ricci::Result<Exit>) = match &cli.command {
        Command::Verify(f) => (f, commands::cmd_verify),
        Command::Flow(f) => (f, commands::cmd_flow),
        Command::Kr(f) => (f, commands::cmd_kr),
        Command::Convergence(f) => (f, commands::cmd_convergence),
    };
    let exit = match RunConfig::resolve(flags) {
        Err(e) => {
            eprintln!("error: {e}");
            Exit::Config
        }
        Ok(cfg) => run(&cfg).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            classify(&e)
        }),
    };
    ExitCode::from(exit as u8)
}
