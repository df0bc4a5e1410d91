mod args;
mod commands;
mod error;
mod output;

use std::env;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

/// Caps the worker pool used by sweeps and searches; 0 or unset means one
/// thread per core.
const THREADS_VAR: &str = "NONLOCAL_CASCADE_THREADS";

fn thread_cap() -> Result<usize, CliError> {
    match env::var(THREADS_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::InvalidArgument(format!("{THREADS_VAR}='{v}' is not a thread count"))),
        Err(env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(CliError::InvalidArgument(format!("{THREADS_VAR}: {e}"))),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (table, meta, out) = match &cli.command {
        Command::ChshCascade(a) => {
            let (t, m) = commands::chsh_cascade(a)?;
            (t, m, &a.out)
        }
        Command::SvetlichnyCascade(a) => {
            let (t, m) = commands::svetlichny_cascade(a)?;
            (t, m, &a.out)
        }
        Command::FindTheta(a) => {
            let (t, m) = commands::find_theta(a)?;
            (t, m, &a.out)
        }
        Command::Sweep(a) => {
            let (t, m) = commands::sweep(&a.kind)?;
            (t, m, a.kind.out())
        }
        Command::Verify(a) => {
            let (t, m, failed) = commands::verify(a)?;
            output::emit(&t, m, &a.out)?;
            return if failed == 0 { Ok(()) } else { Err(CliError::ChecksFailed(failed)) };
        }
    };
    output::emit(&table, meta, out)
}

#[cfg(feature = "parallel")]
fn run_with_threads(cli: &Cli, threads: usize) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::InvalidArgument(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| run(cli))
}

#[cfg(not(feature = "parallel"))]
fn run_with_threads(cli: &Cli, _threads: usize) -> Result<(), CliError> {
    run(cli)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match thread_cap().and_then(|threads| run_with_threads(&cli, threads)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
