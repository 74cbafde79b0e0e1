//! Benchmark ingestion, file formats, a thread-pool executor and the command
//! line front end for `glocalkd-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod modelfile;
pub mod par;
pub mod report;
pub mod snapshot;
pub mod tu;

pub use error::{Error, Result};
pub use par::Pool;
