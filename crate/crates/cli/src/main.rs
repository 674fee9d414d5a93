mod args;
mod commands;
mod layout;
mod output;

use std::process::ExitCode;

use areawatch::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command, Experiment};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] areawatch::Error),
    #[error("{0}")]
    Usage(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Io => 2,
                ErrorKind::Numerical => 3,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn run(cli: Cli) -> CliResult<()> {
    let check = cli.self_check;
    match cli.command {
        Command::Simulate(a) => commands::simulate(&a, check),
        Command::Train(a) => commands::train(&a),
        Command::Detect(a) => commands::detect(&a, check),
        Command::Rate(a) => commands::rate(&a, check),
        Command::Optimize(a) => commands::optimize(&a, check),
        Command::Eval(a) => commands::eval(&a, check),
        Command::Experiment(Experiment::Fig2(a)) => commands::fig2(&a, check),
        Command::Experiment(Experiment::Fig3(a)) => commands::fig3(&a, check),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
