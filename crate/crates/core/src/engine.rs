//! Two-clock simulation driver and latency metrics.
//!
//! The core clock advances in `core_cycle_ns` steps. Every core offers at
//! most one request per core cycle to the arbiter; a full bank queue stalls
//! the core. Every `access_ratio` core cycles the memory clock ticks and the
//! controller runs one memory cycle, whose results complete one memory cycle
//! later.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::codes::{
    build_replication, build_scheme_i, build_scheme_ii, build_scheme_iii, build_uncoded, CodeLayout, Scheme, Word,
};
use crate::controller::{Controller, ControllerConfig, OpKind, Purpose};
use crate::dynamic::DynamicConfig;
use crate::workload::{build_requests, seeded_image, AddressMap, Trace};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub alpha: f64,
    /// Data banks (logical banks for replication).
    pub banks: usize,
    pub rows: usize,
    pub words: usize,
    pub access_ratio: u64,
    pub core_cycle_ns: u64,
    pub controller: ControllerConfig,
    pub dynamic: Option<DynamicConfig>,
    /// Words per transaction.
    pub burst: usize,
    /// Seed of the initial memory image.
    pub seed: u64,
    /// Overrides the static coded range `[0, n)`.
    pub coded_rows: Option<usize>,
    /// Check every read and the final memory against a flat replay.
    pub verify: bool,
    pub record_events: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            scheme: Scheme::SchemeI,
            alpha: 0.15,
            banks: 8,
            rows: 1024,
            words: 16,
            access_ratio: 2,
            core_cycle_ns: 1,
            controller: ControllerConfig::default(),
            dynamic: None,
            burst: 4,
            seed: 1,
            coded_rows: None,
            verify: true,
            record_events: false,
        }
    }
}

impl SimConfig {
    pub fn uncoded(&self) -> SimConfig {
        SimConfig {
            scheme: Scheme::Uncoded,
            dynamic: None,
            coded_rows: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.access_ratio == 0 {
            return Err(Error::config("access_ratio", "must be at least 1"));
        }
        if self.core_cycle_ns == 0 {
            return Err(Error::config("core_cycle_ns", "must be at least 1"));
        }
        if self.burst == 0 {
            return Err(Error::config("burst", "must be at least 1"));
        }
        self.controller.validate()?;
        if self.dynamic.is_some() && !matches!(self.scheme, Scheme::SchemeI | Scheme::SchemeII | Scheme::SchemeIII) {
            return Err(Error::config("dynamic", format!("not supported for scheme {}", self.scheme)));
        }
        Ok(())
    }

    pub fn build_layout(&self) -> Result<CodeLayout> {
        let (l, w) = (self.rows, self.words);
        let fixed = |n: usize| {
            if self.banks != n {
                Err(Error::config("banks", format!("scheme {} needs {n} data banks", self.scheme)))
            } else {
                Ok(())
            }
        };
        let layout = match self.scheme {
            Scheme::Uncoded => build_uncoded(self.banks, l, w)?,
            Scheme::SchemeI => {
                fixed(8)?;
                build_scheme_i(l, w, self.alpha)?
            }
            Scheme::SchemeII => {
                fixed(8)?;
                build_scheme_ii(l, w, self.alpha)?
            }
            Scheme::SchemeIII => build_scheme_iii(l, w, self.alpha, self.banks)?,
            Scheme::ReadReplication { r } => build_replication(r, 0, l, w, self.banks)?,
            Scheme::RwReplication { r, w: wr } => build_replication(r, wr, l, w, self.banks)?,
        };
        match self.coded_rows {
            Some(n) => layout.with_coded_rows(n),
            None => Ok(layout),
        }
    }

    fn build_controller(&self) -> Result<Controller> {
        self.validate()?;
        let layout = self.build_layout()?;
        match self.dynamic {
            Some(d) => Controller::with_dynamic(layout, self.controller, d),
            None => Controller::new(layout, self.controller),
        }
    }

    pub fn address_map(&self) -> AddressMap {
        AddressMap {
            banks: self.banks,
            rows: self.rows,
            words: self.words,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoreMetrics {
    pub core: usize,
    pub critical_read_latency_ns: f64,
    pub transactional_read_latency_ns: f64,
    pub write_latency_ns: f64,
    pub read_transactions: u64,
    pub writes: u64,
    pub stall_cycles: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub critical_read_latency_ns: f64,
    pub transactional_read_latency_ns: f64,
    pub write_latency_ns: f64,
    pub trace_execution_ns: u64,
    pub per_core: Vec<CoreMetrics>,
    pub reads_served: u64,
    pub writes_served: u64,
    pub read_transactions: u64,
    pub degraded_reads: u64,
    pub region_switches: u64,
    pub stall_cycles: u64,
    pub memory_cycles: u64,
    /// Reads whose value differed from the flat replay.
    pub read_mismatches: u64,
    /// Rows whose final logical value differed from the flat replay.
    pub final_mismatches: u64,
    /// All background work finished after the trace drained.
    pub quiesced: bool,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub report: MetricsReport,
    /// One line per memory cycle with activity, when requested.
    pub events: Vec<String>,
}

#[derive(Clone, Copy, Default)]
struct TxnState {
    issue: u64,
    remaining: usize,
    last_completion: u64,
}

/// Memory cycles allowed for background work after the trace drains.
const QUIESCE_LIMIT: u64 = 1_000_000;

pub fn run(trace: &Trace, cfg: &SimConfig) -> Result<MetricsReport> {
    simulate(trace, cfg).map(|o| o.report)
}

pub fn simulate(trace: &Trace, cfg: &SimConfig) -> Result<RunOutput> {
    let mut ctrl = cfg.build_controller()?;
    let map = cfg.address_map();
    let reqs = build_requests(trace, &map, cfg.burst)?;
    let image = seeded_image(cfg.seed, cfg.banks, cfg.rows, cfg.words);
    ctrl.load_image(&image)?;
    let mut oracle = if cfg.verify { image } else { Vec::new() };
    let w = cfg.words;

    let cores = reqs.per_core.len();
    let mut pending = reqs.per_core;
    let mut txns: Vec<TxnState> = reqs
        .transactions
        .iter()
        .map(|t| TxnState {
            issue: t.issue_time,
            remaining: t.words,
            last_completion: 0,
        })
        .collect();
    let ratio = cfg.access_ratio;
    let ns = cfg.core_cycle_ns;
    let period = cfg.dynamic.map(|d| d.period);

    let mut rep = MetricsReport {
        per_core: (0..cores).map(|core| CoreMetrics { core, ..CoreMetrics::default() }).collect(),
        ..MetricsReport::default()
    };
    let mut crit_sum = vec![0u64; cores];
    let mut txn_sum = vec![0u64; cores];
    let mut write_sum = vec![0u64; cores];
    let mut events = Vec::new();
    let mut done = 0usize;
    let mut c: u64 = 0;

    while done < reqs.total {
        let now = c * ns;
        for core in 0..cores {
            let ready = pending[core].front().is_some_and(|r| r.issue_time <= now);
            if !ready {
                continue;
            }
            let req = pending[core].pop_front().expect("ready");
            if let Err(back) = ctrl.push(req) {
                pending[core].push_front(back);
                rep.per_core[core].stall_cycles += 1;
            }
        }

        if c.is_multiple_of(ratio) {
            let m = c / ratio;
            let out = ctrl.schedule_cycle(m)?;
            rep.memory_cycles += 1;
            let completion = (c + ratio) * ns;
            for r in &out.reads {
                let q = &r.request;
                let lat = completion - q.issue_time;
                if q.is_critical {
                    crit_sum[q.core] += lat;
                }
                let t = &mut txns[q.txn_id as usize];
                t.remaining -= 1;
                t.last_completion = t.last_completion.max(completion);
                if t.remaining == 0 {
                    txn_sum[q.core] += t.last_completion - t.issue;
                    rep.per_core[q.core].read_transactions += 1;
                }
                if cfg.verify {
                    let at = (q.addr.bank * cfg.rows + q.addr.row) * w;
                    if r.data[..] != oracle[at..at + w] {
                        rep.read_mismatches += 1;
                    }
                }
            }
            rep.degraded_reads += out
                .pattern
                .recipes
                .iter()
                .filter(|rc| !rc.plan.is_direct())
                .count() as u64;
            for q in &out.writes {
                write_sum[q.core] += completion - q.issue_time;
                rep.per_core[q.core].writes += 1;
                if cfg.verify {
                    let at = (q.addr.bank * cfg.rows + q.addr.row) * w;
                    oracle[at..at + w].copy_from_slice(q.payload.as_deref().expect("write payload"));
                }
            }
            let served = out.reads.len() + out.writes.len();
            rep.reads_served += out.reads.len() as u64;
            rep.writes_served += out.writes.len() as u64;
            done += served;
            if served > 0 {
                rep.trace_execution_ns = rep.trace_execution_ns.max(completion);
            }
            if cfg.record_events && !out.pattern.ops.is_empty() {
                events.push(event_line(m, &out));
            }
        }
        c += 1;

        // skip stretches where nothing can happen
        if ctrl.is_quiescent() && done < reqs.total {
            let next = pending
                .iter()
                .filter_map(|q| q.front().map(|r| r.issue_time.div_ceil(ns)))
                .min()
                .unwrap_or(c);
            let mut target = next.max(c);
            if let Some(p) = period {
                let m = c.div_ceil(ratio);
                let boundary = (m / p + 1) * p * ratio;
                target = target.min(boundary);
            }
            c = target.max(c);
        }
    }

    let mut extra = 0;
    let mut m = c.div_ceil(ratio);
    while !ctrl.is_quiescent() && extra < QUIESCE_LIMIT {
        let out = ctrl.schedule_cycle(m)?;
        if cfg.record_events && !out.pattern.ops.is_empty() {
            events.push(event_line(m, &out));
        }
        m += 1;
        extra += 1;
    }
    rep.quiesced = ctrl.is_quiescent();
    if cfg.verify {
        for bank in 0..cfg.banks {
            for row in 0..cfg.rows {
                let at = (bank * cfg.rows + row) * w;
                if ctrl.logical_row(bank, row) != &oracle[at..at + w] {
                    rep.final_mismatches += 1;
                }
            }
        }
    }

    let mut total_crit = 0;
    let mut total_txn = 0;
    let mut total_write = 0;
    for (core, pc) in rep.per_core.iter_mut().enumerate() {
        pc.critical_read_latency_ns = mean(crit_sum[core], pc.read_transactions);
        pc.transactional_read_latency_ns = mean(txn_sum[core], pc.read_transactions);
        pc.write_latency_ns = mean(write_sum[core], pc.writes);
        rep.read_transactions += pc.read_transactions;
        rep.stall_cycles += pc.stall_cycles;
        total_crit += crit_sum[core];
        total_txn += txn_sum[core];
        total_write += write_sum[core];
    }
    rep.critical_read_latency_ns = mean(total_crit, rep.read_transactions);
    rep.transactional_read_latency_ns = mean(total_txn, rep.read_transactions);
    rep.write_latency_ns = mean(total_write, rep.writes_served);
    rep.region_switches = ctrl.dynamic().map_or(0, |d| d.switches());
    Ok(RunOutput { report: rep, events })
}

fn mean(sum: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

fn event_line(cycle: u64, out: &crate::controller::CycleOutcome) -> String {
    let mut s = format!("{cycle} {} served=", out.pattern.mode);
    let ids: Vec<String> = out
        .reads
        .iter()
        .map(|r| r.request.id)
        .chain(out.writes.iter().map(|q| q.id))
        .map(|id| format!("{id}"))
        .collect();
    s.push_str(if ids.is_empty() { "-" } else { "" });
    s.push_str(&ids.join(","));
    let count = |p: Purpose, k: OpKind| out.pattern.ops.iter().filter(|o| o.purpose == p && o.kind == k).count();
    let _ = write!(
        s,
        " ops=r{}/w{}/rc{}/enc{}/ref{}",
        count(Purpose::Serve, OpKind::Read),
        count(Purpose::Serve, OpKind::Write),
        count(Purpose::Recode, OpKind::Read) + count(Purpose::Recode, OpKind::Write),
        count(Purpose::Encode, OpKind::Read) + count(Purpose::Encode, OpKind::Write),
        count(Purpose::Refresh, OpKind::Refresh),
    );
    s
}

/// Percent improvement of `coded` over `baseline`; positive means faster.
pub fn improvement(baseline: f64, coded: f64) -> f64 {
    if baseline == 0.0 {
        0.0
    } else {
        100.0 * (baseline - coded) / baseline
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImprovementReport {
    pub access_ratio: u64,
    pub critical_read_pct: f64,
    pub transactional_read_pct: f64,
    pub write_pct: f64,
    pub execution_pct: f64,
    pub baseline: MetricsReport,
    pub coded: MetricsReport,
}

impl ImprovementReport {
    pub fn new(access_ratio: u64, baseline: MetricsReport, coded: MetricsReport) -> Self {
        ImprovementReport {
            access_ratio,
            critical_read_pct: improvement(baseline.critical_read_latency_ns, coded.critical_read_latency_ns),
            transactional_read_pct: improvement(
                baseline.transactional_read_latency_ns,
                coded.transactional_read_latency_ns,
            ),
            write_pct: improvement(baseline.write_latency_ns, coded.write_latency_ns),
            execution_pct: improvement(baseline.trace_execution_ns as f64, coded.trace_execution_ns as f64),
            baseline,
            coded,
        }
    }
}

/// Runs the uncoded baseline and the coded configuration on the same trace.
pub fn run_baseline_pair(trace: &Trace, coded: &SimConfig) -> Result<ImprovementReport> {
    let base = run(trace, &coded.uncoded())?;
    let c = run(trace, coded)?;
    Ok(ImprovementReport::new(coded.access_ratio, base, c))
}

/// One point of a parameter sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepCell {
    pub access_ratio: u64,
    pub scheme: Scheme,
    pub alpha: f64,
    pub config: SimConfig,
}

/// Cross product in ratio-major, then scheme, then alpha order. Schemes
/// without an overhead parameter appear once per ratio.
pub fn sweep_grid(base: &SimConfig, ratios: &[u64], schemes: &[Scheme], alphas: &[f64]) -> Result<Vec<SweepCell>> {
    if ratios.is_empty() || schemes.is_empty() || alphas.is_empty() {
        return Err(Error::config("sweep", "every grid axis needs at least one value"));
    }
    let mut cells = Vec::new();
    for &ratio in ratios {
        for &scheme in schemes {
            let overhead = matches!(scheme, Scheme::SchemeI | Scheme::SchemeII | Scheme::SchemeIII);
            let used = if overhead { alphas } else { &alphas[..1] };
            for &alpha in used {
                let config = SimConfig {
                    scheme,
                    alpha,
                    access_ratio: ratio,
                    ..base.clone()
                };
                cells.push(SweepCell {
                    access_ratio: ratio,
                    scheme,
                    alpha,
                    config,
                });
            }
        }
    }
    Ok(cells)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub rate: f64,
    pub report: MetricsReport,
}

pub fn run_cell(trace: &Trace, cell: &SweepCell) -> Result<SweepRow> {
    let layout = cell.config.build_controller()?;
    let rate = crate::codes::rate(layout.layout()).value();
    Ok(SweepRow {
        cell: cell.clone(),
        rate,
        report: run(trace, &cell.config)?,
    })
}

/// Sequential sweep; cells are independent, so callers may run them in parallel instead.
pub fn sweep(
    trace: &Trace,
    base: &SimConfig,
    ratios: &[u64],
    schemes: &[Scheme],
    alphas: &[f64],
) -> Result<Vec<SweepRow>> {
    sweep_grid(base, ratios, schemes, alphas)?
        .iter()
        .map(|c| run_cell(trace, c))
        .collect()
}

/// Data words of an image, for tests that need the initial memory.
pub fn initial_image(cfg: &SimConfig) -> Vec<Word> {
    seeded_image(cfg.seed, cfg.banks, cfg.rows, cfg.words)
}
