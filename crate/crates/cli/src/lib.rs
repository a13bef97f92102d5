//! Batch driver for riccilab experiments: configs, the run pipeline,
//! run comparisons and the acceptance suites.

pub mod checks;
pub mod compare;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod shipped;
pub mod suites;

pub use error::{CliError, CliResult};
