//! Coded multi-bank shared memory.
//!
//! Single-port memory banks are augmented with shallow parity banks (XOR of
//! aligned rows from several data banks, or plain replicas) so that a memory
//! controller can serve several requests to the same bank in one memory cycle.
//!
//! The crate is `no_std` and only needs `alloc`:
//!
//! * [`codes`] builds code layouts and enumerates degraded-read plans,
//! * [`bankarray`] holds materialised bank contents and enforces single-port access,
//! * [`controller`] is the arbiter / bank queue / access scheduler pipeline with
//!   the code status table and the recoding unit,
//! * [`dynamic`] tracks hot regions and re-targets the limited parity space,
//! * [`engine`] drives the two-clock simulation and computes latency metrics.
#![no_std]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod bankarray;
pub mod codes;
pub mod controller;
pub mod dynamic;
pub mod engine;
mod error;
mod gf2;
pub mod workload;

pub use error::{Error, Result};
