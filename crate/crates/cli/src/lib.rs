//! Command-line front end: dataset ingestion and persistence, the
//! `cluster`, `hard`, `simulate`, `evaluate` and `replicate` commands, and
//! the experiment runner they share.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod io;
pub mod summary;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use commands::{dispatch, Cli};
pub use error::{CliError, CliResult};

/// Caps the global worker pool from `FCPCA_THREADS` (`0` or unset: one
/// worker per core).
pub fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("FCPCA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("FCPCA_THREADS=`{raw}` is not a non-negative integer")))?;
    if n > 0 {
        // A pool may already exist when embedded; keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 for usage, validation or ingestion errors, 2 when the
/// clustering degenerates.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match init_threads().and_then(|_| dispatch(cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
