//! Command-line pipeline: `validate`, `export`, `baseline`, `prompt`, `run`,
//! `parse`, `score` and `report`. Stages exchange files only; every command
//! that writes output also writes a manifest next to it.

mod args;
mod cmd;
mod error;
mod io;
mod manifest;

pub use args::Cli;
pub use error::{CliError, ErrorKind};

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    cmd::dispatch(cli)
}
