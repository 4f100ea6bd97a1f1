//! Command-line front end: the full analysis report, figures and small
//! one-off calculations.

#![allow(clippy::result_large_err, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod plot;
pub mod report;
pub mod svg;
pub mod table;

pub use cli::{run, Cli};
pub use error::CliError;
pub use report::{analyze, AnalysisOptions, Report};
