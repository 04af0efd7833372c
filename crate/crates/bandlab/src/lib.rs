//! File formats, a rayon executor and the `bandlab` command line on top of
//! `bandlab-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;

pub use error::CliError;
pub use parallel::RayonExecutor;
