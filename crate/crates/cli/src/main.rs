mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};

const THREADS_VAR: &str = "KREIN_SPECTRA_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!("{THREADS_VAR}={value:?} is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} worker threads: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::InterpSweep(a) => commands::interp_sweep(a),
        Command::Herbst(a) => commands::herbst(a),
        Command::Squire(a) => commands::squire(a),
        Command::Dynamo(a) => commands::dynamo(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::EpLocate(a) => commands::ep_locate(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("krein-spectra: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
