mod analyze;
mod args;
mod eval;
mod segment;
mod serve;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes with stable exit codes: 1 for bad input data, 2 for bad
/// flags or configuration.
#[derive(Debug)]
pub enum CliError {
    Data(String),
    Config(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Data(m) | CliError::Config(m) => f.write_str(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(a) => analyze::run(&a),
        Command::Segment(a) => segment::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Serve(a) => serve::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
