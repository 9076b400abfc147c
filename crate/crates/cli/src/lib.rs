//! The `hardcnf` command line: generate, solve, evolve, batch and
//! cross-check k-CNF formulas.

use std::io::Write;
use std::sync::atomic::AtomicBool;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use commands::*;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "hardcnf",
    version,
    about = "Evolve random k-CNF formulas that are hard for DPLL"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a uniform random k-CNF formula as DIMACS.
    Gen(GenArgs),
    /// Solve a DIMACS file with the instrumented DPLL solver.
    Solve(SolveArgs),
    /// Run one evolution and write trace, formulas and manifest.
    Evolve(EvolveArgs),
    /// Run independent evolutions and summarize them.
    Batch(BatchArgs),
    /// Compare two formulas with an external solver.
    Crosscheck(CrosscheckArgs),
}

/// Runs a parsed command; the result is the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, stop: Option<&AtomicBool>) -> Result<u8> {
    match &cli.command {
        Command::Gen(args) => cmd_gen(args, out),
        Command::Solve(args) => cmd_solve(args, out),
        Command::Evolve(args) => cmd_evolve(args, out, stop),
        Command::Batch(args) => cmd_batch(args, out, stop),
        Command::Crosscheck(args) => cmd_crosscheck(args, out),
    }
}
