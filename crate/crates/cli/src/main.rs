//! `pathcausal` command-line tool.
//!
//! Exit codes: 0 success, 2 input errors (arguments, files, parameters),
//! 3 numerical failures (non-ergodic model, zero-probability data,
//! absolute-continuity violations, instances too large to enumerate).

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pathcausal {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
