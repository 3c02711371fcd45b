//! Command-line front end: instance generation, gradient checking,
//! benchmarking, and end-to-end solves.
//!
//! Exit codes: 0 on success, 1 when a tolerance or convergence check fails
//! (gradcheck always, solve only under `--strict`), 2 on input or shape
//! errors.

mod bench;
mod gen;
mod gradcheck;
mod instance;
mod matfile;
mod solve;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "varproj", version, about = "Structured low-rank fitting toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded problem instance as matrix files.
    Gen(gen::GenArgs),
    /// Check fast gradients against the finite-difference oracle.
    Gradcheck(gradcheck::GradcheckArgs),
    /// Benchmark gradient methods over a size grid.
    Bench(bench::BenchArgs),
    /// Minimize the fitting objective over the model parameters.
    Solve(solve::SolveArgs),
}

/// Failures that map onto the exit-code contract.
#[derive(Debug)]
pub enum CmdError {
    /// Tolerance breach or (strict) non-convergence: exit 1.
    Tolerance(String),
    /// Bad input, shapes, sizes, or I/O: exit 2.
    Input(String),
}

impl CmdError {
    pub fn input(msg: impl Into<String>) -> Self {
        CmdError::Input(msg.into())
    }

    pub fn tolerance(msg: impl Into<String>) -> Self {
        CmdError::Tolerance(msg.into())
    }
}

impl From<varproj_core::Error> for CmdError {
    fn from(e: varproj_core::Error) -> Self {
        CmdError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Gen(args) => gen::run(args),
        Cmd::Gradcheck(args) => gradcheck::run(args),
        Cmd::Bench(args) => bench::run(args),
        Cmd::Solve(args) => solve::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Tolerance(msg)) => {
            eprintln!("varproj: {msg}");
            ExitCode::from(1)
        }
        Err(CmdError::Input(msg)) => {
            eprintln!("varproj: {msg}");
            ExitCode::from(2)
        }
    }
}
