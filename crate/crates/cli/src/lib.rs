//! Configuration parsing and subcommands behind the `mtdpsf` binary.

pub mod commands;
pub mod config;

pub use config::{parse_config, ConfigError, SimulationConfig};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
