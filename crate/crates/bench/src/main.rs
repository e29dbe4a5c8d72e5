use std::process::ExitCode;

use clap::Parser;
use hsim_bench::cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse())
}
