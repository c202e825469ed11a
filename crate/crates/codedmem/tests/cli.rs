use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use codedmem::config::load_config;
use codedmem::trace::parse_trace_str;
use codedmem_core::codes::{rate, Scheme};
use codedmem_core::engine::SimConfig;
use tempfile::TempDir;

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn codedmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codedmem"))
        .args(args)
        .env_remove("CODEDMEM_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = codedmem(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn run_writes_one_metrics_row() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("min.ini");
    fs::write(&cfg, "[layout]\nscheme = I\n").unwrap();
    let trace = dir.path().join("t.trace");
    fs::write(&trace, "0,0,R,0x1000\n1,1,W,0x2000\n2,0,R,0x1000\n").unwrap();
    let out = dir.path().join("out");
    ok(&["run", "--config", s(&cfg), "--trace", s(&trace), "--out", s(&out)]);
    let rows = csv_rows(&out.join("metrics.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "I");
    let json: serde_json::Value = serde_json::from_slice(&fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["metrics"]["reads_served"], 2);
    assert_eq!(json["metrics"]["writes_served"], 1);
}

#[test]
fn bad_alpha_exits_2_naming_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.ini");
    fs::write(&cfg, "[layout]\nalpha = 1.5\n").unwrap();
    let out = codedmem(&["run", "--config", s(&cfg), "--trace", s(&golden("three_reads.trace"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn malformed_trace_exits_2_with_line_number() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.trace");
    fs::write(&trace, "# header\n0,0,R,0x0\n1,0,X,0x8\n").unwrap();
    let out = codedmem(&["run", "--config", s(&golden("three_reads.ini")), "--trace", s(&trace)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn compare_baseline_matches_golden() {
    let dir = TempDir::new().unwrap();
    ok(&[
        "run",
        "--config",
        s(&golden("three_reads.ini")),
        "--trace",
        s(&golden("three_reads.trace")),
        "--compare-baseline",
        "--out",
        s(dir.path()),
    ]);
    let got = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let want = fs::read_to_string(golden("three_reads_baseline.csv")).unwrap();
    assert_eq!(got, want);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["improvement"]["critical_read_pct"], 50.0);
}

#[test]
fn events_log_has_one_line_per_active_cycle() {
    let dir = TempDir::new().unwrap();
    let ev = dir.path().join("events.log");
    let cfg = dir.path().join("plain.ini");
    fs::write(&cfg, "[layout]\nscheme = uncoded\nrows = 64\nwords = 4\n").unwrap();
    ok(&[
        "run",
        "--config",
        s(&cfg),
        "--trace",
        s(&golden("three_reads.trace")),
        "--events",
        s(&ev),
        "--out",
        s(dir.path()),
    ]);
    let log = fs::read_to_string(ev).unwrap();
    assert_eq!(log.lines().count(), 3, "{log}");
    assert!(log.lines().all(|l| l.contains(" R served=")));
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["gen", "--out", s(&path)];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

#[test]
fn gen_is_reproducible_and_seed_comes_from_env() {
    let dir = TempDir::new().unwrap();
    let a = gen(dir.path(), "a", &["--bands", "0x0:0x8000:0.95", "--seed", "9", "--duration", "2000"]);
    let b = gen(dir.path(), "b", &["--bands", "0x0:0x8000:0.95", "--seed", "9", "--duration", "2000"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c");
    let out = Command::new(env!("CARGO_BIN_EXE_codedmem"))
        .args(["gen", "--bands", "0x0:0x8000:0.95", "--duration", "2000", "--out", s(&c)])
        .env("CODEDMEM_SEED", "9")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn two_band_spec_keeps_ninety_five_percent_in_band() {
    let dir = TempDir::new().unwrap();
    let p = gen(
        dir.path(),
        "t",
        &["--bands", "0x0:0x8000:0.475,0x40000:0x8000:0.475", "--duration", "4000"],
    );
    let t = parse_trace_str(&fs::read_to_string(p).unwrap()).unwrap();
    assert!(t.len() >= 100_000, "{}", t.len());
    let inside = t
        .records
        .iter()
        .filter(|r| r.addr < 0x8000 || (0x40000..0x48000).contains(&r.addr))
        .count();
    let frac = inside as f64 / t.len() as f64;
    // banded share plus the part of the uniform background landing in the bands
    let want = 0.95 + 0.05 * (2.0 * 0x8000 as f64 / (1u64 << 20) as f64);
    assert!((frac - want).abs() < 0.01, "{frac} vs {want}");
}

/// Runs of 4 KiB bins each holding at least 1% of all accesses.
fn occupied_bands(t: &codedmem_core::workload::Trace) -> usize {
    let mut bins = vec![0usize; 256];
    for r in &t.records {
        bins[(r.addr / 4096) as usize] += 1;
    }
    let hot: Vec<bool> = bins.iter().map(|&c| c * 100 >= t.len()).collect();
    hot.iter().enumerate().filter(|&(i, &h)| h && (i == 0 || !hot[i - 1])).count()
}

#[test]
fn split_two_gives_four_bands() {
    let dir = TempDir::new().unwrap();
    let bands = ["--bands", "0x0:0x8000:0.475,0x80000:0x8000:0.475", "--duration", "2000"];
    let plain = gen(dir.path(), "plain", &bands);
    let mut args = bands.to_vec();
    args.extend(["--split", "2"]);
    let split = gen(dir.path(), "split", &args);
    let plain = parse_trace_str(&fs::read_to_string(plain).unwrap()).unwrap();
    let split = parse_trace_str(&fs::read_to_string(split).unwrap()).unwrap();
    assert_eq!(occupied_bands(&plain), 2);
    assert_eq!(occupied_bands(&split), 4);
    assert_eq!(plain.len(), split.len());
}

#[test]
fn ramp_moves_the_band_centroid_linearly() {
    let dir = TempDir::new().unwrap();
    let p = gen(
        dir.path(),
        "ramp",
        &["--bands", "0x10000:0x4000:1.0", "--duration", "200000", "--gap", "20", "--ramp", "1.5"],
    );
    let t = parse_trace_str(&fs::read_to_string(p).unwrap()).unwrap();
    let windows = 20;
    let span = 200_000 / windows;
    let mut pts = Vec::new();
    for w in 0..windows {
        let sel: Vec<_> = t.records.iter().filter(|r| r.time_ns / span == w).collect();
        let tm = sel.iter().map(|r| r.time_ns as f64).sum::<f64>() / sel.len() as f64;
        let am = sel.iter().map(|r| r.addr as f64).sum::<f64>() / sel.len() as f64;
        pts.push((tm, am));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = sxy * sxy / (sxx * syy);
    assert!((slope - 1.5).abs() < 0.03, "slope {slope}");
    assert!(r2 > 0.999, "r2 {r2}");
}

#[test]
fn histogram_counts_every_access() {
    let dir = TempDir::new().unwrap();
    let h = dir.path().join("h.csv");
    let p = gen(
        dir.path(),
        "t",
        &["--bands", "0x0:0x8000:0.9", "--duration", "1000", "--histogram", s(&h), "--region-bytes", "65536"],
    );
    let t = parse_trace_str(&fs::read_to_string(p).unwrap()).unwrap();
    let rows = csv_rows(&h);
    assert_eq!(rows.len(), 16);
    let total: usize = rows.iter().map(|r| r[1].parse::<usize>().unwrap()).sum();
    assert_eq!(total, t.len());
}

#[test]
fn sweep_covers_the_grid_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let trace = gen(
        dir.path(),
        "t",
        &["--bands", "0x0:0x8000:0.475,0x10000:0x8000:0.475", "--duration", "300"],
    );
    let sweep = |out: &str, jobs: &str| {
        let out = dir.path().join(out);
        ok(&[
            "sweep",
            "--trace",
            s(&trace),
            "--ratios",
            "1..10",
            "--schemes",
            "I,II,III,uncoded",
            "--jobs",
            jobs,
            "--out",
            s(&out),
        ]);
        out
    };
    let a = sweep("a", "1");
    let b = sweep("b", "4");
    let rows = csv_rows(&a.join("sweep.csv"));
    assert_eq!(rows.len(), 40);
    for r in &rows {
        let scheme: Scheme = r[0].parse().unwrap();
        let cfg = SimConfig {
            scheme,
            ..SimConfig::default()
        };
        let want = rate(&cfg.build_layout().unwrap()).value();
        assert_eq!(r[4], want.to_string(), "{scheme}");
        assert_eq!(r[14], "0");
        assert_eq!(r[15], "0");
    }
    for f in ["sweep.csv", "sweep.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn check_prints_layout_and_density() {
    let dir = TempDir::new().unwrap();
    let trace = gen(dir.path(), "t", &["--bands", "0x0:0x2000:0.9", "--space", "16384", "--duration", "500"]);
    let out = ok(&["check", "--config", s(&golden("three_reads.ini")), "--trace", s(&trace)]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("rate 0.4"), "{text}");
    assert!(text.contains("density HIGH"), "{text}");
    assert!(load_config(golden("three_reads.ini")).is_ok());
}

#[test]
fn trace_outside_memory_is_rejected() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("t.trace");
    fs::write(&trace, "0,0,R,0xffffff\n").unwrap();
    let out = codedmem(&["check", "--config", s(&golden("three_reads.ini")), "--trace", s(&trace)]);
    assert_eq!(out.status.code(), Some(2));
}
