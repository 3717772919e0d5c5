//! Command-line front end: configuration, orchestration and artifact
//! writing for the ground-state experiments.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse_config, ConfigError, ExperimentConfig, Mode};
pub use runner::{run, Check, Outcome};

/// Environment variable overriding the configured output directory.
pub const OUT_ENV: &str = "GROUNDLAB_OUT";
