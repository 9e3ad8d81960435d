#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Configuration, orchestration and file output for the `epp` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod selfcheck;

pub use commands::{cmd_figures, cmd_transform, cmd_verify, Outputs};
pub use config::{Overrides, RunConfig};
pub use error::CliError;
