//! Parallel parameter sweeps. Cells run independently; results keep grid order.

use codedmem_core::codes::Scheme;
use codedmem_core::engine::{run_cell, sweep_grid, SimConfig, SweepRow};
use codedmem_core::workload::Trace;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Runs every cell of the grid, on `jobs` threads when given.
pub fn sweep_parallel(
    trace: &Trace,
    base: &SimConfig,
    ratios: &[u64],
    schemes: &[Scheme],
    alphas: &[f64],
    jobs: Option<usize>,
) -> Result<Vec<SweepRow>> {
    let cells = sweep_grid(base, ratios, schemes, alphas)?;
    let go = || -> Result<Vec<SweepRow>> {
        cells
            .par_iter()
            .map(|c| run_cell(trace, c).map_err(Error::from))
            .collect()
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::config("jobs", e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// `a..b` (inclusive) or a comma list.
pub fn parse_ratios(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::config("ratios", format!("`{s}` is neither a..b nor a list"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    parse_list(s, "ratios")
}

pub fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{p}`")))
        })
        .collect()
}
