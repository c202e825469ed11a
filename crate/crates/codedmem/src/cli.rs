//! Command-line interface.
//!
//! Exit status: 0 on success, 2 for bad input or configuration, 3 when the
//! simulation breaks one of its own invariants.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use codedmem_core::codes::{rate, Scheme};
use codedmem_core::engine::{run_baseline_pair, simulate, MetricsReport, SimConfig};
use codedmem_core::workload::Trace;

use crate::config::{check, load_config};
use crate::error::{Error, Result};
use crate::report::{run_json, run_table, sweep_json, sweep_table};
use crate::sweep::{parse_list, parse_ratios, sweep_parallel};
use crate::trace::{
    add_ramp, classify_density, generate_banded, histogram, parse_bands, parse_trace, split_bands, write_histogram,
    write_trace, GenSpec,
};

#[derive(Parser, Debug)]
#[command(name = "codedmem", version, about = "Coded multi-bank memory simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate one configuration on a trace.
    Run(RunArgs),
    /// Generate a synthetic banded trace.
    Gen(GenArgs),
    /// Run a grid of access ratios, schemes and overheads.
    Sweep(SweepArgs),
    /// Validate a config (and optionally a trace) without simulating.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub trace: PathBuf,
    /// Also run the uncoded baseline and report improvements.
    #[arg(long)]
    pub compare_baseline: bool,
    /// Per-cycle event log.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Directory for metrics.csv and metrics.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Seed of the initial memory image.
    #[arg(long, env = "CODEDMEM_SEED")]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Comma separated `base:width:weight[:slope]` bands.
    #[arg(long, allow_hyphen_values = true)]
    pub bands: String,
    #[arg(long, default_value_t = 8)]
    pub cores: usize,
    /// Trace length in ns.
    #[arg(long, default_value_t = 10_000)]
    pub duration: u64,
    /// Mean per-core gap between transactions in ns.
    #[arg(long, default_value_t = 1.11)]
    pub gap: f64,
    #[arg(long, env = "CODEDMEM_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Fraction of transactions that are writes.
    #[arg(long, default_value_t = 0.3)]
    pub writes: f64,
    /// Words per transaction.
    #[arg(long, default_value_t = 4)]
    pub burst: usize,
    /// Address space in bytes.
    #[arg(long, default_value_t = 1 << 20)]
    pub space: u64,
    /// Split every band into this many pieces spread over the address space.
    #[arg(long)]
    pub split: Option<usize>,
    /// Linear address drift in bytes per ns.
    #[arg(long, allow_hyphen_values = true)]
    pub ramp: Option<f64>,
    /// Output trace file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a `region_index,count` histogram.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Histogram region size in bytes.
    #[arg(long, default_value_t = 4096)]
    pub region_bytes: u64,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Base configuration; defaults apply when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `a..b` or a comma list.
    #[arg(long, default_value = "1..10")]
    pub ratios: String,
    #[arg(long, default_value = "uncoded,I,II,III")]
    pub schemes: String,
    #[arg(long, default_value = "0.15")]
    pub alphas: String,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, env = "CODEDMEM_SEED")]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

fn read_trace(path: &Path) -> Result<Trace> {
    let f = fs::File::open(path).map_err(|e| Error::config("trace", format!("{}: {e}", path.display())))?;
    parse_trace(std::io::BufReader::new(f))
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(fs::File::create(path)?)
}

fn verified(r: &MetricsReport) -> Result<()> {
    if r.read_mismatches + r.final_mismatches > 0 {
        return Err(Error::Fault(format!(
            "{} reads and {} final rows disagree with the replay",
            r.read_mismatches, r.final_mismatches
        )));
    }
    Ok(())
}

fn layout_rate(cfg: &SimConfig) -> Result<f64> {
    let mut layout = cfg.build_layout()?;
    if let Some(d) = cfg.dynamic {
        let unit = codedmem_core::dynamic::DynamicUnit::new(cfg.rows, cfg.alpha, d)?;
        layout = layout.with_segment_depth(unit.segment_depth());
    }
    Ok(rate(&layout).value())
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let trace = read_trace(&args.trace)?;
    cfg.record_events = args.events.is_some();
    let out = simulate(&trace, &cfg)?;
    verified(&out.report)?;
    let imp = if args.compare_baseline {
        let quiet = SimConfig {
            record_events: false,
            ..cfg.clone()
        };
        let pair = run_baseline_pair(&trace, &quiet)?;
        verified(&pair.baseline)?;
        Some(pair)
    } else {
        None
    };
    let rate = layout_rate(&cfg)?;
    fs::create_dir_all(&args.out)?;
    run_table(&cfg, rate, &out.report, imp.as_ref()).write_csv(create(&args.out.join("metrics.csv"))?)?;
    let json = run_json(&cfg, rate, &out.report, imp.as_ref());
    let mut f = create(&args.out.join("metrics.json"))?;
    serde_json::to_writer_pretty(&mut f, &json)?;
    writeln!(f)?;
    if let Some(path) = &args.events {
        let mut f = std::io::BufWriter::new(create(path)?);
        for line in &out.events {
            writeln!(f, "{line}")?;
        }
        f.flush()?;
    }
    Ok(())
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    let spec = GenSpec {
        bands: parse_bands(&args.bands)?,
        cores: args.cores,
        duration_ns: args.duration,
        mean_gap_ns: args.gap,
        write_fraction: args.writes,
        burst: args.burst,
        address_space: args.space,
        seed: args.seed,
    };
    let mut trace = generate_banded(&spec)?;
    if let Some(k) = args.split {
        if k == 0 {
            return Err(Error::config("split", "must be at least 1"));
        }
        trace = split_bands(&trace, k, args.space);
    }
    if let Some(slope) = args.ramp {
        trace = add_ramp(&trace, slope, args.space);
    }
    match &args.out {
        Some(p) => {
            let mut f = std::io::BufWriter::new(create(p)?);
            write_trace(&trace, &mut f)?;
            f.flush()?;
        }
        None => write_trace(&trace, std::io::stdout().lock())?,
    }
    if let Some(p) = &args.histogram {
        write_histogram(&histogram(&trace, args.region_bytes, args.space), create(p)?)?;
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut base = match &args.config {
        Some(p) => load_config(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = args.seed {
        base.seed = s;
    }
    let ratios = parse_ratios(&args.ratios)?;
    let schemes: Vec<Scheme> = parse_list(&args.schemes, "schemes")?;
    let alphas: Vec<f64> = parse_list(&args.alphas, "alphas")?;
    let trace = read_trace(&args.trace)?;
    let rows = sweep_parallel(&trace, &base, &ratios, &schemes, &alphas, args.jobs)?;
    for r in &rows {
        verified(&r.report)?;
    }
    fs::create_dir_all(&args.out)?;
    sweep_table(&rows).write_csv(create(&args.out.join("sweep.csv"))?)?;
    let mut f = create(&args.out.join("sweep.json"))?;
    serde_json::to_writer_pretty(&mut f, &sweep_json(&rows))?;
    writeln!(f)?;
    Ok(())
}

pub fn cmd_check(args: &CheckArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    check(&cfg)?;
    let layout = cfg.build_layout()?;
    print!("{}", layout.describe());
    println!("rate {}", layout_rate(&cfg)?);
    if let Some(p) = &args.trace {
        let trace = read_trace(p)?;
        let map = cfg.address_map();
        for r in &trace.records {
            map.map(r.addr)?;
        }
        if !trace.is_empty() {
            let (d, gap) = classify_density(&trace)?;
            println!("trace {} records, density {d} (mean gap {gap:.2} ns)", trace.len());
        }
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Check(a) => cmd_check(a),
    }
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
