//! Trace files, synthetic workloads, configuration files, reports and the
//! command-line front end of the coded memory simulator.

pub mod cli;
pub mod config;
mod error;
pub mod report;
pub mod sweep;
pub mod trace;

pub use error::{Error, Result};
