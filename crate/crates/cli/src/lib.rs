//! Command-line front end: argument parsing helpers, report rendering,
//! subcommands and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod parse;
pub mod report;
