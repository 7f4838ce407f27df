//! Command-line front end: configuration, solution caching, sweeps and
//! JSON/CSV artifacts.
//!
//! Exit codes: 0 success, 2 solver non-convergence, 3 invalid input,
//! 4 I/O failure.

pub mod archive;
pub mod cache;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use archive::SolutionArchive;
pub use config::{Cli, RunConfig};
pub use error::CliError;

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
        }
    };
    match run_cli(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(cli: Cli) -> Result<(), CliError> {
    let (cfg, runtime) = config::resolve(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(runtime.jobs)
        .build()
        .map_err(|e| error::input(format!("cannot start {} worker threads: {e}", runtime.jobs)))?;
    let outcome = pool.install(|| commands::execute(&cfg, &runtime))?;
    commands::emit(&outcome.artifact, runtime.out.as_deref())?;
    eprintln!("{}", outcome.summary);
    match outcome.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
