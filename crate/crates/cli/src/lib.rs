//! Scenario runner for `qtransport-core`: TOML scenario files, built-in
//! scenarios, parameter sweeps and CSV/JSON output.

// `!(x > 0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;

pub use config::{Member, ScenarioConfig, Sweep};
pub use error::{CliError, ConfigError};
