//! Command-line front end: model-file parsing and subcommand logic.
//!
//! The binary (`rex`) wraps [`commands`]; everything is exposed as a library
//! so the parsing and the subcommands can be driven directly from tests.

pub mod commands;
pub mod modelfile;
