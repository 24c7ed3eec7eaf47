//! `grunbaum`: run the verification suites from the command line.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 when the
//! input is malformed or violates a precondition.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, RunConfig, Settings};

#[derive(Parser, Debug)]
#[command(name = "grunbaum", version)]
#[command(about = "Check Grünbaum-type inequalities, depth bounds and stability certificates")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Verify the one-dimensional bound for a density spec
    Verify1d(Settings),
    /// Tukey depth of a sample CSV, grid density or generator spec
    Depth(Settings),
    /// Marginal along a direction and its concavity class
    Marginal(Settings),
    /// Busemann sublevel masses of a product density
    Product(Settings),
    /// Verify a needle decomposition against its product density
    Needles(Settings),
    /// Stability certificate for a density, or needle-level stability
    Stability(Settings),
    /// Write extremal model specs and the cylinder product spec
    Models(Settings),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, settings) = match cli.command {
        Sub::Verify1d(s) => (Command::Verify1d, s),
        Sub::Depth(s) => (Command::Depth, s),
        Sub::Marginal(s) => (Command::Marginal, s),
        Sub::Product(s) => (Command::Product, s),
        Sub::Needles(s) => (Command::Needles, s),
        Sub::Stability(s) => (Command::Stability, s),
        Sub::Models(s) => (Command::Models, s),
    };
    match run(command, settings) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, settings: Settings) -> anyhow::Result<bool> {
    let cfg = RunConfig::resolve(command, settings)?;
    let outcome = commands::run(&cfg)?;
    let written = output::write_all(&cfg, &commands::input_files(&cfg), &outcome)?;
    println!(
        "{} {}: {}",
        if outcome.passed { "PASS" } else { "FAIL" },
        command.name(),
        outcome.summary
    );
    for path in written {
        println!("  wrote {}", path.display());
    }
    Ok(outcome.passed)
}
