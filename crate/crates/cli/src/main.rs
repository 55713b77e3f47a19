// `!(x > 0.0)` rejects NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod presets;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Sink;

fn run(cli: Cli) -> Result<(), error::CliError> {
    let sink = Sink::new(cli.out_dir);
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a, &sink),
        Command::Branches(a) => commands::branches(a, &sink),
        Command::Eckhaus(a) => commands::eckhaus(a, &sink),
        Command::Simulate(a) => commands::simulate(a, &sink),
        Command::Compare(a) => commands::compare(a, &sink),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on malformed flags.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
