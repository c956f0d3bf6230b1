//! Entry point: parse flags, dispatch, and map errors to exit codes
//! (0 success, 1 validation error, 2 I/O error).

mod cli;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command};

fn run(cli: Cli) -> clozekit::Result<()> {
    match cli.command {
        Command::Generate(args) => commands::cmd_generate(args),
        Command::Stats(args) => commands::cmd_stats(args),
        Command::Probe(args) => commands::cmd_probe(args),
        Command::Solve(args) => commands::cmd_solve(args),
        Command::Sweep(args) => commands::cmd_sweep(args),
        Command::Synth(args) => commands::cmd_synth(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are not failures; anything else is bad usage.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
