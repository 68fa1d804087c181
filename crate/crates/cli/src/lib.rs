//! Command-line front end for the curvature engine: builds family members,
//! runs the identity audit and pseudosymmetry checks over a grid of sample
//! points, and emits JSON or text reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::run;
pub use config::{Cli, Command, Format, RunConfig};
pub use error::CliError;
pub use report::PointReport;
