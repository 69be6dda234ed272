//! Library side of the `antiplane` command line tool: configuration
//! resolution, report serialization, the sparse direct solver backend, and
//! the subcommand implementations. The binary in `main.rs` is a thin clap
//! dispatcher over this crate, which keeps every piece reachable from
//! integration tests.

use std::fmt;

pub mod commands;
pub mod config;
pub mod direct;
pub mod report;

/// CLI-level failures. Configuration problems exit with 2, runtime failures
/// (solver, IO) with 1, mirroring common Unix tool conventions.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(antiplane::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Run(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<antiplane::Error> for CliError {
    fn from(e: antiplane::Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) | CliError::Io(_) => 1,
        }
    }
}
