//! Trace files, synthetic banded workloads and their augmentations.
//!
//! File format, one access per line:
//!
//! ```text
//! # time_ns,core,kind,address
//! 0,0,R,0x1000
//! 3,1,W,0x2008
//! ```

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use codedmem_core::controller::AccessKind;
use codedmem_core::workload::{Trace, TraceRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};

pub fn parse_trace(input: impl Read) -> Result<Trace> {
    let mut records = Vec::new();
    let mut last: Vec<Option<u64>> = Vec::new();
    for (i, text) in BufReader::new(input).lines().enumerate() {
        let text = text?;
        let body = text.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let rec: Vec<&str> = body.split(',').map(str::trim).collect();
        let line = i as u64 + 1;
        let bad = |reason: String| Error::Parse { line, reason };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", rec.len())));
        }
        let time_ns: u64 = rec[0].parse().map_err(|_| bad(format!("bad time `{}`", rec[0])))?;
        let core: usize = rec[1].parse().map_err(|_| bad(format!("bad core id `{}`", rec[1])))?;
        let kind = match rec[2] {
            "R" | "r" => AccessKind::Read,
            "W" | "w" => AccessKind::Write,
            k => return Err(bad(format!("kind must be R or W, found `{k}`"))),
        };
        let hex = rec[3].trim_start_matches("0x").trim_start_matches("0X");
        let addr = u64::from_str_radix(hex, 16).map_err(|_| bad(format!("bad address `{}`", rec[3])))?;
        if last.len() <= core {
            last.resize(core + 1, None);
        }
        if let Some(prev) = last[core] {
            if time_ns < prev {
                return Err(Error::TimeRegression {
                    line,
                    core,
                    time: time_ns,
                    prev,
                });
            }
        }
        last[core] = Some(time_ns);
        records.push(TraceRecord { time_ns, core, kind, addr });
    }
    Ok(Trace::new(records)?)
}

pub fn parse_trace_str(s: &str) -> Result<Trace> {
    parse_trace(s.as_bytes())
}

pub fn write_trace(trace: &Trace, mut out: impl Write) -> Result<()> {
    for r in &trace.records {
        let k = match r.kind {
            AccessKind::Read => 'R',
            AccessKind::Write => 'W',
        };
        writeln!(out, "{},{},{},{:#x}", r.time_ns, r.core, k, r.addr)?;
    }
    Ok(())
}

pub fn serialize_trace(trace: &Trace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// One address band of a synthetic workload.
#[derive(Clone, Debug, PartialEq)]
pub struct BandSpec {
    pub base: u64,
    pub width: u64,
    /// Fraction of accesses drawn from this band.
    pub weight: f64,
    /// Drift of the band in bytes per ns.
    pub slope: f64,
}

fn parse_num(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u64::from_str_radix(h, 16).ok(),
        None => s.parse().ok(),
    }
}

impl FromStr for BandSpec {
    type Err = Error;

    /// `base:width:weight[:slope]`, with base and width in decimal or `0x` hex.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("bands", format!("`{s}` is not base:width:weight[:slope]"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        Ok(BandSpec {
            base: parse_num(parts[0]).ok_or_else(bad)?,
            width: parse_num(parts[1]).ok_or_else(bad)?,
            weight: parts[2].trim().parse().map_err(|_| bad())?,
            slope: match parts.get(3) {
                Some(p) => p.trim().parse().map_err(|_| bad())?,
                None => 0.0,
            },
        })
    }
}

impl fmt::Display for BandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}:{:#x}:{}", self.base, self.width, self.weight)?;
        if self.slope != 0.0 {
            write!(f, ":{}", self.slope)?;
        }
        Ok(())
    }
}

/// Comma separated list of bands.
pub fn parse_bands(s: &str) -> Result<Vec<BandSpec>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub bands: Vec<BandSpec>,
    pub cores: usize,
    pub duration_ns: u64,
    /// Mean time between transactions of one core.
    pub mean_gap_ns: f64,
    pub write_fraction: f64,
    /// Words per transaction.
    pub burst: usize,
    pub address_space: u64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            bands: Vec::new(),
            cores: 8,
            duration_ns: 10_000,
            mean_gap_ns: 1.11,
            write_fraction: 0.3,
            burst: 4,
            address_space: 1 << 20,
            seed: 1,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let stride = 8 * self.burst as u64;
        if self.cores == 0 {
            return Err(Error::config("cores", "must be at least 1"));
        }
        if self.duration_ns == 0 {
            return Err(Error::config("duration", "must be positive"));
        }
        if !(self.mean_gap_ns > 0.0 && self.mean_gap_ns.is_finite()) {
            return Err(Error::config("gap", "must be a positive number of ns"));
        }
        if !(0.0..=1.0).contains(&self.write_fraction) {
            return Err(Error::config("writes", "must lie in [0, 1]"));
        }
        if self.burst == 0 {
            return Err(Error::config("burst", "must be at least 1"));
        }
        if self.address_space < stride || !self.address_space.is_multiple_of(stride) {
            return Err(Error::config("space", format!("must be a positive multiple of {stride} bytes")));
        }
        let mut total = 0.0;
        for b in &self.bands {
            if !(b.weight >= 0.0) {
                return Err(Error::config("bands", format!("negative weight in {b}")));
            }
            if b.width < stride || b.base.saturating_add(b.width) > self.address_space {
                return Err(Error::config(
                    "bands",
                    format!("{b} must hold one burst and fit in {:#x} bytes", self.address_space),
                ));
            }
            total += b.weight;
        }
        if total > 1.0 + 1e-9 {
            return Err(Error::config("bands", format!("weights sum to {total}, above 1")));
        }
        Ok(())
    }
}

/// Synthetic trace: per-core exponential gaps, burst starts drawn from the
/// bands by weight with the remainder uniform over the address space.
pub fn generate_banded(spec: &GenSpec) -> Result<Trace> {
    spec.validate()?;
    let stride = 8 * spec.burst as u64;
    let exp = Exp::new(1.0 / spec.mean_gap_ns).map_err(|e| Error::config("gap", e.to_string()))?;
    let mut records = Vec::new();
    for core in 0..spec.cores {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(core as u64);
        let mut t = 0.0f64;
        loop {
            t += exp.sample(&mut rng);
            let time_ns = t as u64;
            if time_ns >= spec.duration_ns {
                break;
            }
            let kind = if rng.random::<f64>() < spec.write_fraction {
                AccessKind::Write
            } else {
                AccessKind::Read
            };
            let mut u: f64 = rng.random();
            let mut start = None;
            for b in &spec.bands {
                if u < b.weight {
                    let slots = b.width / stride;
                    let off = rng.random_range(0..slots) * stride;
                    let drift = (b.slope * time_ns as f64) as u64 / stride * stride;
                    start = Some((b.base + off + drift) % spec.address_space);
                    break;
                }
                u -= b.weight;
            }
            let start = start.unwrap_or_else(|| rng.random_range(0..spec.address_space / stride) * stride);
            for k in 0..spec.burst as u64 {
                records.push(TraceRecord {
                    time_ns,
                    core,
                    kind,
                    addr: start + 8 * k,
                });
            }
        }
    }
    records.sort_by_key(|r| (r.time_ns, r.core));
    Ok(Trace::new(records)?)
}

fn rebuild(trace: &Trace, f: impl Fn(usize, &TraceRecord) -> u64) -> Trace {
    let records = trace
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| TraceRecord { addr: f(i, r), ..*r })
        .collect();
    Trace {
        records,
        core_count: trace.core_count,
    }
}

/// Number of histogram bins used for band detection.
pub const DETECT_BINS: u64 = 256;

/// Contiguous runs of histogram bins holding at least an eighth of the
/// busiest bin, as `(base, width)` byte ranges.
pub fn detect_bands(trace: &Trace, address_space: u64) -> Vec<(u64, u64)> {
    let bin = address_space.div_ceil(DETECT_BINS).max(1);
    let counts = histogram(trace, bin, address_space);
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Vec::new();
    }
    let hot: Vec<bool> = counts.iter().map(|&c| c * 8 >= max).collect();
    let mut bands = Vec::new();
    let mut i = 0;
    while i < hot.len() {
        if hot[i] {
            let start = i;
            while i < hot.len() && hot[i] {
                i += 1;
            }
            bands.push((start as u64 * bin, (i - start) as u64 * bin));
        } else {
            i += 1;
        }
    }
    bands
}

/// Splits every detected band into `factor` contiguous pieces and spreads
/// the pieces evenly over the address space. Only addresses change.
pub fn split_bands(trace: &Trace, factor: usize, address_space: u64) -> Trace {
    if factor <= 1 {
        return trace.clone();
    }
    let bands = detect_bands(trace, address_space);
    let pieces = (bands.len() * factor) as u64;
    let slot = (address_space / pieces.max(1)) / 64 * 64;
    rebuild(trace, |_, r| {
        let Some((k, &(base, width))) = bands
            .iter()
            .enumerate()
            .find(|(_, &(b, w))| r.addr >= b && r.addr < b + w)
        else {
            return r.addr;
        };
        let piece = width.div_ceil(factor as u64);
        let off = r.addr - base;
        let j = off / piece;
        let target = (k as u64 * factor as u64 + j) * slot;
        (target + off % piece) % address_space
    })
}

/// Adds a linear drift of `slope` bytes per ns to every address.
pub fn add_ramp(trace: &Trace, slope: f64, address_space: u64) -> Trace {
    rebuild(trace, |_, r| {
        let shift = (slope * r.time_ns as f64).floor() as i128;
        (r.addr as i128 + shift).rem_euclid(address_space as i128) as u64
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Density {
    Low,
    Medium,
    High,
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Density::Low => "LOW",
            Density::Medium => "MEDIUM",
            Density::High => "HIGH",
        })
    }
}

pub const HIGH_GAP_NS: f64 = 5.0;
pub const LOW_GAP_NS: f64 = 50.0;

/// Mean per-core gap between accesses. Words issued together at adjacent
/// addresses count as one access.
pub fn mean_gap_ns(trace: &Trace) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::config("trace", "density of an empty trace is undefined"));
    }
    let mut first = vec![None; trace.core_count];
    let mut last: Vec<Option<&TraceRecord>> = vec![None; trace.core_count];
    let mut events = vec![0u64; trace.core_count];
    for r in &trace.records {
        let joins = last[r.core]
            .is_some_and(|p| p.time_ns == r.time_ns && p.kind == r.kind && p.addr + 8 == r.addr);
        if !joins {
            events[r.core] += 1;
            first[r.core].get_or_insert(r.time_ns);
        }
        last[r.core] = Some(r);
    }
    let gaps: Vec<f64> = (0..trace.core_count)
        .filter(|&c| events[c] >= 2)
        .map(|c| {
            let span = last[c].unwrap().time_ns - first[c].unwrap();
            span as f64 / (events[c] - 1) as f64
        })
        .collect();
    if gaps.is_empty() {
        return Ok(f64::INFINITY);
    }
    Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
}

pub fn classify_density(trace: &Trace) -> Result<(Density, f64)> {
    let gap = mean_gap_ns(trace)?;
    let d = if gap < HIGH_GAP_NS {
        Density::High
    } else if gap > LOW_GAP_NS {
        Density::Low
    } else {
        Density::Medium
    };
    Ok((d, gap))
}

/// Access counts per `region_bytes` slice of the address space.
pub fn histogram(trace: &Trace, region_bytes: u64, address_space: u64) -> Vec<u64> {
    let region_bytes = region_bytes.max(1);
    let mut counts = vec![0u64; address_space.div_ceil(region_bytes) as usize];
    for r in &trace.records {
        let i = (r.addr / region_bytes) as usize;
        if i >= counts.len() {
            counts.resize(i + 1, 0);
        }
        counts[i] += 1;
    }
    counts
}

/// Writes `region_index,count` rows.
pub fn write_histogram(counts: &[u64], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["region_index", "count"])?;
    for (i, c) in counts.iter().enumerate() {
        w.write_record([i.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
