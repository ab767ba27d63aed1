//! Files, descriptors, experiments and the command line for
//! `statcost-core`.
//!
//! - [`descriptor`]: serializable game, pair and distribution descriptors.
//! - [`format`]: the `statcost-ds/1` dataset file.
//! - [`experiments`]: seeded experiment grids and their reports.
//! - [`cli`]: the `statcost` binary.

pub mod cli;
pub mod descriptor;
pub mod error;
pub mod experiments;
pub mod format;
pub mod report;

pub use error::{CliError, CliResult};
