//! Data ingestion, experiment sweeps and command-line front end for
//! `nldp-core`.
pub mod cli;
pub mod config;
pub mod constants;
pub mod error;
pub mod harness;
pub mod ingest;

pub use error::{Error, Result};
