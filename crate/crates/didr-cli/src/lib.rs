//! Library surface of the command-line driver, exposed for integration
//! tests: configuration parsing, CSV formats, and the command
//! implementations.

pub mod commands;
pub mod config;
pub mod csv;
