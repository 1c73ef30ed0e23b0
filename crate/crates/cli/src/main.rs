mod args;
mod commands;
mod emit;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Ground { path: String, message: String },
    #[error("solve: {0}")]
    Solve(String),
    #[error("output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 1,
            CliError::Parse { .. } => 2,
            CliError::Ground { .. } => 3,
            CliError::Solve(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; help and version are not errors.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Plan(a) => commands::plan(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::LearnDet(a) => commands::learn_det(a),
        Command::Bench(a) => commands::bench(a),
        Command::Detplan(c) => commands::detplan(c),
        Command::Oracle(c) => commands::oracle(c),
        Command::Gen(c) => commands::gen(c),
        Command::Serve(a) => commands::serve(a),
        Command::Client(a) => commands::client(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fflao: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
