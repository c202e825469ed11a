use codedmem_core::codes::Scheme;
use codedmem_core::controller::{AccessKind, ControllerConfig};
use codedmem_core::dynamic::DynamicConfig;
use codedmem_core::engine::{run, SimConfig};
use codedmem_core::workload::{splitmix64, Trace, TraceRecord};
use proptest::prelude::*;

/// Random bursty trace over the low `span` bytes of memory.
fn random_trace(seed: u64, n: usize, cores: usize, span: u64, write_pct: u64, gap: u64) -> Trace {
    let mut s = seed;
    let mut next = || {
        s = s.wrapping_add(1);
        splitmix64(s)
    };
    let mut t = vec![0u64; cores];
    let mut recs = Vec::with_capacity(n);
    while recs.len() < n {
        let core = (next() % cores as u64) as usize;
        t[core] += next() % (2 * gap + 1);
        let kind = if next() % 100 < write_pct { AccessKind::Write } else { AccessKind::Read };
        let base = (next() % span) & !31;
        let words = 1 + next() % 4;
        for k in 0..words {
            if recs.len() < n {
                recs.push(TraceRecord {
                    time_ns: t[core],
                    core,
                    kind,
                    addr: base + 8 * k,
                });
            }
        }
    }
    recs.sort_by_key(|r| r.time_ns);
    Trace::new(recs).unwrap()
}

fn cfg(scheme: Scheme, dynamic: bool) -> SimConfig {
    SimConfig {
        scheme,
        alpha: 0.25,
        banks: if scheme == Scheme::SchemeIII { 9 } else { 8 },
        rows: 128,
        words: 4,
        access_ratio: 2,
        dynamic: dynamic.then_some(DynamicConfig { r: 0.125, period: 200 }),
        ..SimConfig::default()
    }
}

fn schemes() -> Vec<(Scheme, bool)> {
    vec![
        (Scheme::Uncoded, false),
        (Scheme::SchemeI, false),
        (Scheme::SchemeI, true),
        (Scheme::SchemeII, false),
        (Scheme::SchemeII, true),
        (Scheme::SchemeIII, false),
        (Scheme::SchemeIII, true),
        (Scheme::ReadReplication { r: 2 }, false),
        (Scheme::RwReplication { r: 2, w: 1 }, false),
    ]
}

#[test]
fn every_read_matches_the_replay_for_all_schemes() {
    for (scheme, dynamic) in schemes() {
        let c = cfg(scheme, dynamic);
        let span = c.address_map().capacity_bytes() / 2;
        let trace = random_trace(7, 20_000, 6, span, 40, 3);
        let r = run(&trace, &c).unwrap();
        assert_eq!(r.reads_served + r.writes_served, trace.len() as u64, "{scheme} {dynamic}");
        assert_eq!(r.read_mismatches, 0, "{scheme} dynamic={dynamic}");
        assert_eq!(r.final_mismatches, 0, "{scheme} dynamic={dynamic}");
        assert!(r.quiesced, "{scheme} dynamic={dynamic}");
    }
}

#[test]
fn coding_never_serves_fewer_reads_per_cycle_on_read_only_traces() {
    let c = cfg(Scheme::SchemeI, false);
    let trace = random_trace(11, 5_000, 8, 4096, 0, 1);
    let coded = run(&trace, &c).unwrap();
    let plain = run(&trace, &c.uncoded()).unwrap();
    assert!(coded.memory_cycles <= plain.memory_cycles);
    assert!(coded.degraded_reads > 0);
}

#[test]
fn latencies_respect_the_clock() {
    let c = cfg(Scheme::SchemeI, true);
    let trace = random_trace(3, 5_000, 4, 8192, 30, 4);
    let r = run(&trace, &c).unwrap();
    assert!(r.critical_read_latency_ns >= c.access_ratio as f64);
    assert!(r.transactional_read_latency_ns >= r.critical_read_latency_ns);
    assert!(r.write_latency_ns >= c.access_ratio as f64);
    for pc in &r.per_core {
        assert!(pc.transactional_read_latency_ns >= pc.critical_read_latency_ns);
    }
}

#[test]
fn capped_writes_stay_consistent() {
    let c = SimConfig {
        controller: ControllerConfig {
            write_cap_per_bank: Some(2),
            ..ControllerConfig::default()
        },
        ..cfg(Scheme::SchemeI, false)
    };
    let trace = random_trace(5, 5_000, 8, 2048, 70, 1);
    let r = run(&trace, &c).unwrap();
    assert_eq!(r.read_mismatches + r.final_mismatches, 0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_traces_keep_data_integrity(
        seed in any::<u64>(),
        which in 0usize..9,
        write_pct in 0u64..100,
        gap in 0u64..6,
        ratio in 1u64..5,
    ) {
        let (scheme, dynamic) = schemes()[which];
        let c = SimConfig { access_ratio: ratio, ..cfg(scheme, dynamic) };
        let span = c.address_map().capacity_bytes();
        let trace = random_trace(seed, 1_500, 5, span / 3, write_pct, gap);
        let r = run(&trace, &c).unwrap();
        prop_assert_eq!(r.read_mismatches, 0);
        prop_assert_eq!(r.final_mismatches, 0);
        prop_assert!(r.quiesced);
    }
}
