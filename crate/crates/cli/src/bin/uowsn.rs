use std::process::ExitCode;

use clap::Parser;
use uowsn_cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse())
}
