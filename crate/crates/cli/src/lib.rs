//! Command-line front end: run configuration, result files and subcommands.

pub mod config;
pub mod output;
pub mod run;
