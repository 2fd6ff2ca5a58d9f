use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    agmm_cli::run(agmm_cli::Cli::parse())
}
