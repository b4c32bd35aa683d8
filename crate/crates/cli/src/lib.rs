//! The `consolidate` command line: dataset fetching, sequential training,
//! λ sweeps, pruning curves, the explosion demo, and SVG reports.

pub mod args;
pub mod commands;
pub mod config;
pub mod fetch;
pub mod plot;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

pub use args::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] consolidate_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("download of {url} failed: {detail}")]
    Download { url: String, detail: String },

    #[error("{}:{line}: {detail}", path.display())]
    Schema { path: PathBuf, line: u64, detail: String },

    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for usage and configuration mistakes, 2 for everything that failed
    /// while running.
    pub fn exit_code(&self) -> i32 {
        use consolidate_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_) | E::Usage(_)) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(consolidate_core::Error::MissingData { .. }) = e {
                eprintln!(
                    "hint: run `consolidate fetch-data --mnist-mirror <url> --fashion-mirror <url>`, \
                     or place the IDX files at the paths above and point --data-dir \
                     (or CONSOLIDATE_DATA_DIR) at their root"
                );
            }
            e.exit_code()
        }
    }
}
