//! Command-line front end for the sandpile solver.

#![allow(clippy::needless_range_loop)]

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use sandflow_core::Error;

mod commands;
pub mod examples;
pub mod pipeline;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Maximal and minimal profiles, rays and transport density.
    Solve,
    /// Visibility and separation hypotheses only.
    Check,
    /// Check a supplied pair of fields against the scene.
    Verify,
    /// Stability bound between the scene source and a second source.
    Compare,
    /// Write a bundled fixture and run its scripted checks.
    Example,
}

#[derive(Debug, Parser)]
#[command(name = "sandflow", version, about = "Sandpile profiles and transport densities on polygons")]
pub struct Args {
    pub command: Command,
    /// Scene file, or fixture id for `example`.
    pub target: Option<String>,
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Grid spacing override.
    #[arg(long)]
    pub h: Option<f64>,
    /// Field file holding u (column `u`, `u_phi`, or the first one).
    #[arg(long)]
    pub u: Option<PathBuf>,
    /// Field file holding v (column `v`, `v_f`, or the first one).
    #[arg(long)]
    pub v: Option<PathBuf>,
    /// Second source for `compare`: inline JSON or a JSON file.
    #[arg(long)]
    pub f2: Option<String>,
    #[arg(long)]
    pub fixture: Option<String>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", value_name = "KEY=VAL")]
    pub tol: Vec<String>,
    /// Seed for the random test functions.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Unreachable { .. }
            | Error::EmptyProjection { .. }
            | Error::OutsideRay { .. }
            | Error::GradientAtOrigin => EXIT_INTERNAL,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure { code: EXIT_CONFIG, message: e.to_string() }
    }
}

/// Runs one command and returns its exit code; messages go to stderr.
pub fn run(args: &Args) -> i32 {
    let result = match args.command {
        Command::Solve => commands::solve(args),
        Command::Check => commands::check(args),
        Command::Verify => commands::verify(args),
        Command::Compare => commands::compare(args),
        Command::Example => commands::example(args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("sandflow: {f}");
            f.code
        }
    }
}
