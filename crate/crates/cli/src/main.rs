//! `hamforge` command-line front end.

mod args;
mod commands;
mod config;
mod error;
mod output;
mod source;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Compile(a) => commands::compile::run(a),
        Command::Verify(a) => commands::verify::run(a),
        Command::Sweep(a) => commands::sweep::run(a),
        Command::Bounds(a) => commands::bounds::run(a),
    }
}

fn run() -> CliResult<()> {
    let args = config::expand_args(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Err(CliError::Usage) } else { Ok(()) };
        }
    };
    if cli.jobs == Some(0) {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    hamforge::qdrift::with_jobs(cli.jobs, || dispatch(&cli))?
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Usage) {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
