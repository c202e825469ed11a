use codedmem_core::bankarray::{BankState, RowMap};
use codedmem_core::codes::*;
use codedmem_core::workload::seeded_image;
use proptest::prelude::*;

fn all_layouts(rows: usize, words: usize, alpha: f64) -> Vec<CodeLayout> {
    vec![
        build_uncoded(8, rows, words).unwrap(),
        build_scheme_i(rows, words, alpha).unwrap(),
        build_scheme_ii(rows, words, alpha).unwrap(),
        build_scheme_iii(rows, words, alpha, 9).unwrap(),
        build_scheme_iii(rows, words, alpha, 8).unwrap(),
        build_replication(2, 0, rows, words, 8).unwrap(),
        build_replication(3, 0, rows, words, 4).unwrap(),
        build_replication(2, 1, rows, words, 4).unwrap(),
    ]
}

fn encoded(layout: &CodeLayout, seed: u64) -> (BankState, Vec<Word>) {
    let image = seeded_image(seed, layout.num_data_banks(), layout.rows(), layout.words());
    let mut banks = BankState::new(layout);
    banks
        .initialize_from_oracle(layout, &RowMap::for_layout(layout), &image)
        .unwrap();
    (banks, image)
}

fn decode(banks: &BankState, plan: &ReadPlan) -> Vec<Word> {
    let rows: Vec<&[Word]> = plan.reads.iter().map(|r| banks.row(r.bank, r.row)).collect();
    xor_rows(banks.words(), &rows).unwrap()
}

#[test]
fn parity_row_totals() {
    let rows = 1000;
    for (alpha, i, ii, iii) in [(0.1, 1200, 2000, 900), (0.25, 3000, 5000, 2250), (1.0, 12000, 20000, 9000)] {
        let total = |l: CodeLayout| l.physical_depths()[l.num_data_banks()..].iter().sum::<usize>();
        assert_eq!(total(build_scheme_i(rows, 4, alpha).unwrap()), i);
        assert_eq!(total(build_scheme_ii(rows, 4, alpha).unwrap()), ii);
        assert_eq!(total(build_scheme_iii(rows, 4, alpha, 9).unwrap()), iii);
    }
}

#[test]
fn replication_serves_r_reads_per_bank() {
    for r in 1..=4 {
        let l = build_replication(r, 0, 64, 4, 8).unwrap();
        let plans = degraded_read_plans(&l, &RowMap::for_layout(&l), Address::new(5, 9, 0), &AllFresh);
        assert_eq!(plans.len(), r);
        assert!(plans.iter().all(|p| p.locality() == 1));
        let banks: std::collections::BTreeSet<usize> = plans.iter().flat_map(|p| p.banks()).collect();
        assert_eq!(banks.len(), r);
    }
}

#[test]
fn rates_match_closed_forms() {
    let l = 1000.0;
    for alpha in [0.1, 0.25, 0.5, 1.0] {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(rate(&build_scheme_i(1000, 4, alpha).unwrap()).value(), 8.0 * l / (8.0 * l + 12.0 * alpha * l)));
        assert!(close(rate(&build_scheme_ii(1000, 4, alpha).unwrap()).value(), 8.0 * l / (8.0 * l + 20.0 * alpha * l)));
        assert!(close(rate(&build_scheme_iii(1000, 4, alpha, 9).unwrap()).value(), 9.0 * l / (9.0 * l + 9.0 * alpha * l)));
    }
    for r in 1..5 {
        let v = rate(&build_replication(r, 0, 100, 4, 8).unwrap()).value();
        assert!((v - 1.0 / r as f64).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn every_plan_reconstructs_the_target(
        rows in 4usize..=64,
        words in 1usize..6,
        alpha_pct in 10u32..=100,
        seed in any::<u64>(),
    ) {
        let alpha = alpha_pct as f64 / 100.0;
        prop_assume!(shallow_depth(alpha, rows) >= 1);
        for layout in all_layouts(rows, words, alpha) {
            let (banks, image) = encoded(&layout, seed);
            let rm = RowMap::for_layout(&layout);
            for bank in 0..layout.num_data_banks() {
                for row in 0..rows {
                    let start = (bank * rows + row) * words;
                    let want = &image[start..start + words];
                    let plans = degraded_read_plans(&layout, &rm, Address::new(bank, row, 0), &AllFresh);
                    prop_assert!(plans[0].is_direct());
                    if row >= layout.coded_rows() {
                        prop_assert_eq!(plans.len(), 1);
                    }
                    for p in &plans {
                        prop_assert_eq!(&decode(&banks, p)[..], want, "{} {:?}", layout.scheme(), p);
                        let mut seen = std::collections::BTreeSet::new();
                        prop_assert!(p.banks().all(|b| seen.insert(b)), "plan reuses a bank");
                    }
                    for w in plans[1..].windows(2) {
                        prop_assert!(w[0].locality() <= w[1].locality());
                    }
                }
            }
        }
    }

    #[test]
    fn layouts_are_well_formed(rows in 1usize..=256, alpha_pct in 1u32..=100) {
        let alpha = alpha_pct as f64 / 100.0;
        prop_assume!(shallow_depth(alpha, rows) >= 1);
        for layout in all_layouts(rows, 2, alpha) {
            let n = layout.num_data_banks();
            prop_assert_eq!(layout.physical_depths().len(), layout.num_physical_banks());
            prop_assert!(layout.coded_rows() <= rows);
            for p in layout.parity_banks() {
                let mut end = 0;
                for s in &p.segments {
                    prop_assert!(s.row_offset >= end);
                    end = s.row_offset + s.depth;
                    prop_assert!(s.depth >= layout.coded_rows());
                    prop_assert!(s.sources.iter().all(|b| b < n));
                    prop_assert!(s.sources.iter().all(|b| layout.group_of(b) == layout.parity_group(n + p.id)));
                }
                prop_assert!(end <= p.depth_rows);
            }
        }
    }

    #[test]
    fn xor_is_self_inverse(a in prop::collection::vec(any::<u64>(), 1..8), seed in any::<u64>()) {
        let b: Vec<u64> = a.iter().map(|x| x ^ seed).collect();
        let x = xor_rows(a.len(), &[&a, &b]).unwrap();
        prop_assert_eq!(xor_rows(a.len(), &[&x, &b]).unwrap(), a);
    }
}
