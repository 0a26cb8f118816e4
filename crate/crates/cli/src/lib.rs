//! Configuration, run orchestration, snapshot I/O and verification for the
//! `mns` command-line tool.

pub mod config;
pub mod convergence;
pub mod run;
pub mod snapshot;
pub mod verify;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_ENV: &str = "MNS_OUTPUT_DIR";
