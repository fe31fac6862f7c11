//! `wvlab`: command-line front end for the wvlab-core pipelines.
//!
//! Data goes to standard output or `--out`; diagnostics go to standard error.
//! Exit codes: 0 success, 2 invalid input, 3 a guaranteed inequality failed
//! numerically, 4 numeric domain failure.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use wvlab_core::Error;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Assertion(_) => 3,
        Error::Io(_) => 2,
        e if e.is_validation() => 2,
        _ => 4,
    }
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("wvlab: cannot configure {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wvlab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
