//! CSV and JSON reports.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `scheme`, `alpha`, `access_ratio`, `dynamic` | configuration |
//! | `rate` | data rows over all physical rows |
//! | `critical_read_latency_ns` | mean latency of the first word of read transactions |
//! | `transactional_read_latency_ns` | mean latency of whole read transactions |
//! | `write_latency_ns` | mean issue-to-commit latency of writes |
//! | `trace_execution_ns` | completion time of the last request |
//! | `region_switches`, `stall_cycles` | dynamic encodes started, core cycles lost to full queues |
//! | `reads_served` ... `final_mismatches` | accounting and verification counters |
//!
//! With a baseline comparison, the baseline metrics and the four
//! percent improvements follow, positive meaning the coded run is faster.

use std::io::Write;

use codedmem_core::engine::{ImprovementReport, MetricsReport, SimConfig, SweepRow};
use serde_json::{json, Value};

use crate::error::Result;

pub const METRIC_COLUMNS: [&str; 16] = [
    "scheme",
    "alpha",
    "access_ratio",
    "dynamic",
    "rate",
    "critical_read_latency_ns",
    "transactional_read_latency_ns",
    "write_latency_ns",
    "trace_execution_ns",
    "region_switches",
    "stall_cycles",
    "reads_served",
    "writes_served",
    "degraded_reads",
    "read_mismatches",
    "final_mismatches",
];

pub const BASELINE_COLUMNS: [&str; 8] = [
    "baseline_critical_read_latency_ns",
    "baseline_transactional_read_latency_ns",
    "baseline_write_latency_ns",
    "baseline_trace_execution_ns",
    "critical_read_improvement_pct",
    "transactional_read_improvement_pct",
    "write_improvement_pct",
    "execution_improvement_pct",
];

/// A header plus string rows, written as CSV.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("utf-8 csv")
    }
}

pub fn metric_cells(cfg: &SimConfig, rate: f64, r: &MetricsReport) -> Vec<String> {
    vec![
        cfg.scheme.to_string(),
        cfg.alpha.to_string(),
        cfg.access_ratio.to_string(),
        cfg.dynamic.is_some().to_string(),
        rate.to_string(),
        r.critical_read_latency_ns.to_string(),
        r.transactional_read_latency_ns.to_string(),
        r.write_latency_ns.to_string(),
        r.trace_execution_ns.to_string(),
        r.region_switches.to_string(),
        r.stall_cycles.to_string(),
        r.reads_served.to_string(),
        r.writes_served.to_string(),
        r.degraded_reads.to_string(),
        r.read_mismatches.to_string(),
        r.final_mismatches.to_string(),
    ]
}

fn baseline_cells(imp: &ImprovementReport) -> Vec<String> {
    let b = &imp.baseline;
    vec![
        b.critical_read_latency_ns.to_string(),
        b.transactional_read_latency_ns.to_string(),
        b.write_latency_ns.to_string(),
        b.trace_execution_ns.to_string(),
        imp.critical_read_pct.to_string(),
        imp.transactional_read_pct.to_string(),
        imp.write_pct.to_string(),
        imp.execution_pct.to_string(),
    ]
}

/// One-row table for a single run, optionally with baseline columns.
pub fn run_table(cfg: &SimConfig, rate: f64, r: &MetricsReport, imp: Option<&ImprovementReport>) -> Table {
    let mut header: Vec<&str> = METRIC_COLUMNS.to_vec();
    let mut row = metric_cells(cfg, rate, r);
    if let Some(imp) = imp {
        header.extend(BASELINE_COLUMNS);
        row.extend(baseline_cells(imp));
    }
    let mut t = Table::new(&header);
    t.rows.push(row);
    t
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&METRIC_COLUMNS);
    t.rows = rows
        .iter()
        .map(|r| metric_cells(&r.cell.config, r.rate, &r.report))
        .collect();
    t
}

pub fn config_json(cfg: &SimConfig) -> Value {
    json!({
        "scheme": cfg.scheme.to_string(),
        "alpha": cfg.alpha,
        "banks": cfg.banks,
        "rows": cfg.rows,
        "words": cfg.words,
        "coded_rows": cfg.coded_rows,
        "access_ratio": cfg.access_ratio,
        "core_cycle_ns": cfg.core_cycle_ns,
        "queue_depth": cfg.controller.queue_depth,
        "write_threshold": cfg.controller.write_threshold,
        "write_cap": cfg.controller.write_cap_per_bank,
        "idle_write_drain": cfg.controller.idle_write_drain,
        "burst": cfg.burst,
        "seed": cfg.seed,
        "dynamic": cfg.dynamic.map(|d| json!({ "r": d.r, "period": d.period })),
    })
}

pub fn metrics_json(r: &MetricsReport) -> Value {
    json!({
        "critical_read_latency_ns": r.critical_read_latency_ns,
        "transactional_read_latency_ns": r.transactional_read_latency_ns,
        "write_latency_ns": r.write_latency_ns,
        "trace_execution_ns": r.trace_execution_ns,
        "reads_served": r.reads_served,
        "writes_served": r.writes_served,
        "read_transactions": r.read_transactions,
        "degraded_reads": r.degraded_reads,
        "region_switches": r.region_switches,
        "stall_cycles": r.stall_cycles,
        "memory_cycles": r.memory_cycles,
        "read_mismatches": r.read_mismatches,
        "final_mismatches": r.final_mismatches,
        "quiesced": r.quiesced,
        "per_core": r.per_core.iter().map(|c| json!({
            "core": c.core,
            "critical_read_latency_ns": c.critical_read_latency_ns,
            "transactional_read_latency_ns": c.transactional_read_latency_ns,
            "write_latency_ns": c.write_latency_ns,
            "read_transactions": c.read_transactions,
            "writes": c.writes,
            "stall_cycles": c.stall_cycles,
        })).collect::<Vec<_>>(),
    })
}

pub fn improvement_json(imp: &ImprovementReport) -> Value {
    json!({
        "access_ratio": imp.access_ratio,
        "critical_read_pct": imp.critical_read_pct,
        "transactional_read_pct": imp.transactional_read_pct,
        "write_pct": imp.write_pct,
        "execution_pct": imp.execution_pct,
        "baseline": metrics_json(&imp.baseline),
    })
}

pub fn run_json(cfg: &SimConfig, rate: f64, r: &MetricsReport, imp: Option<&ImprovementReport>) -> Value {
    let mut v = json!({
        "config": config_json(cfg),
        "rate": rate,
        "metrics": metrics_json(r),
    });
    if let Some(imp) = imp {
        v["improvement"] = improvement_json(imp);
    }
    v
}

pub fn sweep_json(rows: &[SweepRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| run_json(&r.cell.config, r.rate, &r.report, None))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_table_has_one_row_and_matching_width() {
        let cfg = SimConfig::default();
        let r = MetricsReport::default();
        let t = run_table(&cfg, 0.8, &r, None);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.header.len(), t.rows[0].len());
        let imp = ImprovementReport::new(2, r.clone(), r.clone());
        let t = run_table(&cfg, 0.8, &r, Some(&imp));
        assert_eq!(t.header.len(), METRIC_COLUMNS.len() + BASELINE_COLUMNS.len());
        assert_eq!(t.header.len(), t.rows[0].len());
        assert!(t.to_csv_string().starts_with("scheme,alpha,access_ratio,dynamic,rate,critical_read_latency_ns,"));
    }

    #[test]
    fn json_nests_config_and_metrics() {
        let v = run_json(&SimConfig::default(), 1.0, &MetricsReport::default(), None);
        assert_eq!(v["config"]["scheme"], "I");
        assert_eq!(v["metrics"]["trace_execution_ns"], 0);
        assert!(v.get("improvement").is_none());
    }
}
