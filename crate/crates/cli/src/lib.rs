//! Command-line front end: simulation, association scans, scaling
//! benchmarks and Manhattan plots over tab-separated files.

pub mod commands;
pub mod error;
pub mod formats;
pub mod plot;

pub use commands::{run, Cli};
pub use error::{exit, CliError};
