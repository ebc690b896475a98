//! Event files, reports and the `evpipe` command line on top of
//! [`evpipe_core`].
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or
//! arguments, 3 malformed input data.

pub mod cli;
pub mod commands;
pub mod io;

pub use cli::{run, CliError, SCHEMA_VERSION};
