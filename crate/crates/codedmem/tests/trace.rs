use codedmem::trace::*;
use codedmem_core::controller::AccessKind;
use codedmem_core::workload::{Trace, TraceRecord};
use proptest::prelude::*;

fn arb_trace() -> impl Strategy<Value = Trace> {
    prop::collection::vec((0u64..50, 0usize..4, any::<bool>(), 0u64..(1 << 20)), 0..200).prop_map(|raw| {
        let mut t = [0u64; 4];
        let recs = raw
            .into_iter()
            .map(|(dt, core, w, addr)| {
                t[core] += dt;
                TraceRecord {
                    time_ns: t[core],
                    core,
                    kind: if w { AccessKind::Write } else { AccessKind::Read },
                    addr: addr & !7,
                }
            })
            .collect();
        Trace::new(recs).unwrap()
    })
}

fn same_except_addresses(a: &Trace, b: &Trace) -> bool {
    a.len() == b.len()
        && a.records
            .iter()
            .zip(&b.records)
            .all(|(x, y)| x.time_ns == y.time_ns && x.core == y.core && x.kind == y.kind)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn serialize_then_parse_is_identity(t in arb_trace()) {
        let back = parse_trace_str(&serialize_trace(&t)).unwrap();
        prop_assert_eq!(back.records, t.records);
    }

    #[test]
    fn ramp_only_moves_addresses(t in arb_trace(), slope in -8.0f64..8.0) {
        let space = 1u64 << 20;
        let r = add_ramp(&t, slope, space);
        prop_assert!(same_except_addresses(&t, &r));
        for (x, y) in t.records.iter().zip(&r.records) {
            let want = (x.addr as i128 + (slope * x.time_ns as f64).floor() as i128).rem_euclid(space as i128);
            prop_assert_eq!(y.addr as i128, want);
        }
    }

    #[test]
    fn zero_ramp_is_identity(t in arb_trace()) {
        prop_assert_eq!(add_ramp(&t, 0.0, 1 << 20).records, t.records);
    }

    #[test]
    fn split_only_moves_addresses(t in arb_trace(), factor in 1usize..5) {
        let space = 1u64 << 20;
        let s = split_bands(&t, factor, space);
        prop_assert!(same_except_addresses(&t, &s));
        prop_assert!(s.records.iter().all(|r| r.addr < space));
        if factor == 1 {
            prop_assert_eq!(&s.records, &t.records);
        }
    }

    #[test]
    fn generated_traces_respect_their_spec(
        seed in any::<u64>(),
        cores in 1usize..6,
        burst in prop::sample::select(vec![1usize, 2, 4]),
        writes in 0.0f64..1.0,
    ) {
        let spec = GenSpec {
            bands: parse_bands("0x1000:0x2000:0.6").unwrap(),
            cores,
            duration_ns: 300,
            mean_gap_ns: 2.0,
            write_fraction: writes,
            burst,
            address_space: 1 << 16,
            seed,
        };
        let t = generate_banded(&spec).unwrap();
        prop_assert_eq!(t.len() % burst, 0);
        for r in &t.records {
            prop_assert!(r.core < cores);
            prop_assert!(r.time_ns < 300);
            prop_assert!(r.addr < 1 << 16);
        }
        prop_assert_eq!(generate_banded(&spec).unwrap().records, t.records);
    }
}

#[test]
fn hundred_ns_gap_is_low_density() {
    let t = generate_banded(&GenSpec {
        bands: parse_bands("0x0:0x8000:0.95").unwrap(),
        mean_gap_ns: 100.0,
        duration_ns: 100_000,
        ..GenSpec::default()
    })
    .unwrap();
    let (d, gap) = classify_density(&t).unwrap();
    assert_eq!(d, Density::Low);
    assert!((gap - 100.0).abs() < 5.0, "{gap}");
}

#[test]
fn empty_trace_has_no_density() {
    assert!(classify_density(&Trace::new(Vec::new()).unwrap()).is_err());
}
