//! Command-line driver for `kspm`: trace export, resumable runs,
//! verification suites, benchmarks and growth analysis.

pub mod analyze;
pub mod args;
pub mod bench;
pub mod error;
pub mod format;
pub mod simulate;
pub mod suites;

pub use error::{CliError, Result};
