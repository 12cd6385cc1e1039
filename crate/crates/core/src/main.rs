use std::process::ExitCode;

use clap::Parser;
use nodal_lab::cli::{run_cli, Cli};

fn main() -> ExitCode {
    run_cli(Cli::parse())
}
