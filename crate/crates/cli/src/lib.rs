//! Command-line harness around `flexdog-core`: input loading, configuration,
//! report and artifact writing.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod idx;
pub mod pgm;
pub mod report;
pub mod visual;

pub use error::{CliError, Result};
