//! Code layouts: which parity banks exist, what each of their rows encodes,
//! and how a data row can be reconstructed from them.
//!
//! All codes here are binary: a parity row is the word-wise XOR of the aligned
//! rows of its source banks, and a single-source segment is a verbatim replica.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use crate::bankarray::RowMap;
use crate::{Error, Result};

pub type Word = u64;

/// Set of data banks as a bitmask. Layouts never exceed 32 data banks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BankSet(pub u32);

impl BankSet {
    pub const fn single(bank: usize) -> Self {
        BankSet(1 << bank)
    }

    pub fn of(banks: &[usize]) -> Self {
        BankSet(banks.iter().fold(0, |m, &b| m | (1 << b)))
    }

    pub fn contains(self, bank: usize) -> bool {
        bank < 32 && self.0 & (1 << bank) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |b| self.0 & (1 << b) != 0)
    }
}

/// One word-row of one data bank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address {
    pub bank: usize,
    pub row: usize,
    pub col: usize,
}

impl Address {
    pub const fn new(bank: usize, row: usize, col: usize) -> Self {
        Address { bank, row, col }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Uncoded,
    SchemeI,
    SchemeII,
    SchemeIII,
    ReadReplication { r: usize },
    RwReplication { r: usize, w: usize },
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Uncoded => f.write_str("uncoded"),
            Scheme::SchemeI => f.write_str("I"),
            Scheme::SchemeII => f.write_str("II"),
            Scheme::SchemeIII => f.write_str("III"),
            Scheme::ReadReplication { r } => write!(f, "rep{r}"),
            Scheme::RwReplication { r, w } => write!(f, "rep{r}w{w}"),
        }
    }
}

impl core::str::FromStr for Scheme {
    type Err = Error;

    /// Accepts the `Display` forms, case-insensitively, plus `none` and `rep{r}w{w}`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let bad = || Error::InvalidArgument(format!("unknown scheme `{s}`"));
        match t.as_str() {
            "uncoded" | "none" => return Ok(Scheme::Uncoded),
            "i" | "1" => return Ok(Scheme::SchemeI),
            "ii" | "2" => return Ok(Scheme::SchemeII),
            "iii" | "3" => return Ok(Scheme::SchemeIII),
            _ => {}
        }
        let rest = t.strip_prefix("rep").ok_or_else(bad)?;
        match rest.split_once('w') {
            Some((r, w)) => Ok(Scheme::RwReplication {
                r: r.parse().map_err(|_| bad())?,
                w: w.parse().map_err(|_| bad())?,
            }),
            None => Ok(Scheme::ReadReplication {
                r: rest.parse().map_err(|_| bad())?,
            }),
        }
    }
}

/// A contiguous block of rows inside a parity bank, all encoding the same
/// source set. Physical row `row_offset + k` holds the k-th coded data row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParitySegment {
    pub sources: BankSet,
    pub row_offset: usize,
    pub depth: usize,
}

impl ParitySegment {
    pub fn is_replica(&self) -> bool {
        self.sources.len() == 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityBankSpec {
    /// Parity index; the physical bank id is `num_data_banks + id`.
    pub id: usize,
    pub depth_rows: usize,
    pub segments: Vec<ParitySegment>,
}

/// A physical parity location: one segment of one parity bank.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParityLoc {
    /// Physical bank id.
    pub bank: usize,
    pub segment: usize,
}

/// Freshness of one data row across its physical copies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RowStatus {
    /// Data bank and every parity covering the row agree.
    #[default]
    AllFresh,
    /// The data bank holds the latest value; covering parities are stale.
    DataFresh,
    /// The given parity location holds the latest value verbatim; the data
    /// bank and all other covering parities are stale.
    ParityFresh(ParityLoc),
}

impl RowStatus {
    /// Two-bit encoding used by the status table (00 / 01 / 10).
    pub fn code(self) -> u8 {
        match self {
            RowStatus::AllFresh => 0b00,
            RowStatus::DataFresh => 0b01,
            RowStatus::ParityFresh(_) => 0b10,
        }
    }
}

/// Read access to per-row freshness.
pub trait StatusView {
    fn status(&self, bank: usize, row: usize) -> RowStatus;
}

/// Status view for freshly encoded memory.
#[derive(Clone, Copy, Debug, Default)]
pub struct AllFresh;

impl StatusView for AllFresh {
    fn status(&self, _bank: usize, _row: usize) -> RowStatus {
        RowStatus::AllFresh
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhysicalRead {
    pub bank: usize,
    pub row: usize,
}

/// A way to obtain one data row: XOR of the listed physical rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadPlan {
    pub target: Address,
    pub reads: Vec<PhysicalRead>,
}

impl ReadPlan {
    pub fn locality(&self) -> usize {
        self.reads.len()
    }

    pub fn is_direct(&self) -> bool {
        self.reads.len() == 1 && self.reads[0].bank == self.target.bank
    }

    pub fn banks(&self) -> impl Iterator<Item = usize> + '_ {
        self.reads.iter().map(|r| r.bank)
    }
}

/// Information rate as an exact ratio of row counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rate {
    pub data_rows: u64,
    pub total_rows: u64,
}

impl Rate {
    pub fn value(self) -> f64 {
        self.data_rows as f64 / self.total_rows as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodeLayout {
    scheme: Scheme,
    num_data_banks: usize,
    rows: usize,
    words: usize,
    alpha: f64,
    parity_banks: Vec<ParityBankSpec>,
    groups: Vec<BankSet>,
    group_of_bank: Vec<usize>,
    parity_group: Vec<usize>,
    coded_rows: usize,
    /// Replication only: r groups of (w+1) physical copies per logical bank.
    copy_groups: Vec<Vec<usize>>,
}

/// `floor(alpha * rows)` tolerant of binary representation error (0.15 * 1000).
pub fn shallow_depth(alpha: f64, rows: usize) -> usize {
    let x = alpha * rows as f64;
    (x + 1e-9) as usize
}

/// `ceil(x)` for non-negative `x`, tolerant of representation error.
pub(crate) fn ceil_usize(x: f64) -> usize {
    let f = (x + 1e-9) as usize;
    if (f as f64) < x - 1e-9 {
        f + 1
    } else {
        f
    }
}

fn check_dims(rows: usize, words: usize) -> Result<()> {
    if rows == 0 {
        return Err(Error::config("rows", "must be at least 1"));
    }
    if words == 0 {
        return Err(Error::config("words", "must be at least 1"));
    }
    Ok(())
}

fn check_alpha(alpha: f64, rows: usize) -> Result<usize> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::config("alpha", format!("{alpha} is outside (0, 1]")));
    }
    let depth = shallow_depth(alpha, rows);
    if depth == 0 {
        return Err(Error::config(
            "alpha",
            format!("alpha * rows = {} leaves no coded rows", alpha * rows as f64),
        ));
    }
    Ok(depth)
}

impl CodeLayout {
    fn assemble(
        scheme: Scheme,
        num_data_banks: usize,
        rows: usize,
        words: usize,
        alpha: f64,
        segment_sets: Vec<Vec<BankSet>>,
        segment_depth: usize,
        groups: Vec<BankSet>,
    ) -> Self {
        let mut group_of_bank = vec![usize::MAX; num_data_banks];
        for (g, set) in groups.iter().enumerate() {
            for b in set.iter() {
                group_of_bank[b] = g;
            }
        }
        let mut parity_banks = Vec::with_capacity(segment_sets.len());
        let mut parity_group = Vec::with_capacity(segment_sets.len());
        for (id, sets) in segment_sets.into_iter().enumerate() {
            let first = sets.iter().find_map(|s| s.iter().next()).unwrap_or(0);
            parity_group.push(group_of_bank[first]);
            let segments: Vec<ParitySegment> = sets
                .into_iter()
                .enumerate()
                .map(|(k, sources)| ParitySegment {
                    sources,
                    row_offset: k * segment_depth,
                    depth: segment_depth,
                })
                .collect();
            parity_banks.push(ParityBankSpec {
                id,
                depth_rows: segments.len() * segment_depth,
                segments,
            });
        }
        CodeLayout {
            scheme,
            num_data_banks,
            rows,
            words,
            alpha,
            parity_banks,
            groups,
            group_of_bank,
            parity_group,
            coded_rows: segment_depth.min(rows),
            copy_groups: Vec::new(),
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
    pub fn num_data_banks(&self) -> usize {
        self.num_data_banks
    }
    pub fn num_parity_banks(&self) -> usize {
        self.parity_banks.len()
    }
    pub fn num_physical_banks(&self) -> usize {
        self.num_data_banks + self.parity_banks.len()
    }
    /// Rows per data bank (L).
    pub fn rows(&self) -> usize {
        self.rows
    }
    /// Words per row (W).
    pub fn words(&self) -> usize {
        self.words
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn parity_banks(&self) -> &[ParityBankSpec] {
        &self.parity_banks
    }
    pub fn groups(&self) -> &[BankSet] {
        &self.groups
    }
    pub fn group_of(&self, data_bank: usize) -> usize {
        self.group_of_bank[data_bank]
    }
    /// Group of a parity bank, by physical id.
    pub fn parity_group(&self, physical: usize) -> usize {
        self.parity_group[physical - self.num_data_banks]
    }
    pub fn copy_groups(&self) -> &[Vec<usize>] {
        &self.copy_groups
    }
    /// Static coded range `[0, coded_rows)`.
    pub fn coded_rows(&self) -> usize {
        self.coded_rows
    }
    pub fn is_parity(&self, physical: usize) -> bool {
        physical >= self.num_data_banks
    }
    pub fn parity(&self, physical: usize) -> &ParityBankSpec {
        &self.parity_banks[physical - self.num_data_banks]
    }
    pub fn segment(&self, loc: ParityLoc) -> &ParitySegment {
        &self.parity(loc.bank).segments[loc.segment]
    }
    /// Physical depth of every bank, data banks first.
    pub fn physical_depths(&self) -> Vec<usize> {
        let mut d = vec![self.rows; self.num_data_banks];
        d.extend(self.parity_banks.iter().map(|p| p.depth_rows));
        d
    }

    /// Parity locations in `group` that cover data bank `bank`, ordered by bank id then segment.
    pub fn segments_covering(&self, bank: usize) -> impl Iterator<Item = (ParityLoc, &ParitySegment)> + '_ {
        let n = self.num_data_banks;
        self.parity_banks.iter().flat_map(move |p| {
            p.segments
                .iter()
                .enumerate()
                .filter(move |(_, s)| s.sources.contains(bank))
                .map(move |(k, s)| {
                    (
                        ParityLoc {
                            bank: n + p.id,
                            segment: k,
                        },
                        s,
                    )
                })
        })
    }

    /// Same layout, but only data rows `[0, n)` are encoded (`n = 0` disables coding
    /// while keeping the parity banks physically present).
    pub fn with_coded_rows(mut self, n: usize) -> Result<Self> {
        let max = self
            .parity_banks
            .iter()
            .flat_map(|p| p.segments.iter().map(|s| s.depth))
            .min()
            .unwrap_or(0);
        if n > max {
            return Err(Error::config(
                "coded_rows",
                format!("{n} exceeds parity segment depth {max}"),
            ));
        }
        self.coded_rows = n;
        Ok(self)
    }

    /// Same code, with every segment resized to `depth` physical rows and
    /// segments re-packed back to back. Used when parity space is managed
    /// region by region rather than as a fixed prefix of the data rows.
    pub fn with_segment_depth(mut self, depth: usize) -> Self {
        for p in &mut self.parity_banks {
            for (k, s) in p.segments.iter_mut().enumerate() {
                s.row_offset = k * depth;
                s.depth = depth;
            }
            p.depth_rows = p.segments.len() * depth;
        }
        self.coded_rows = self.coded_rows.min(depth);
        self
    }

    pub fn bank_name(&self, physical: usize) -> String {
        if physical >= self.num_data_banks {
            return format!("P{}", physical - self.num_data_banks);
        }
        if self.scheme == Scheme::SchemeIII && physical == 8 {
            return String::from("z");
        }
        if physical < 26 {
            String::from((b'a' + physical as u8) as char)
        } else {
            format!("d{physical}")
        }
    }

    /// Human-readable dump: header, bank table, then one line per segment
    /// in the form `P<k> rows[off..off+n) = XOR(banks...)`.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let rate = rate(self);
        let _ = writeln!(
            out,
            "scheme {} alpha {} rows {} words {} coded_rows {} rate {}/{}",
            self.scheme, self.alpha, self.rows, self.words, self.coded_rows, rate.data_rows, rate.total_rows
        );
        for (g, set) in self.groups.iter().enumerate() {
            let names: Vec<String> = set.iter().map(|b| self.bank_name(b)).collect();
            let _ = writeln!(out, "group {g} data {}", names.join(","));
        }
        for p in &self.parity_banks {
            for s in &p.segments {
                let names: Vec<String> = s.sources.iter().map(|b| self.bank_name(b)).collect();
                let _ = writeln!(
                    out,
                    "P{} rows[{}..{}) = XOR({})",
                    p.id,
                    s.row_offset,
                    s.row_offset + s.depth,
                    names.join(",")
                );
            }
        }
        out
    }
}

pub fn build_uncoded(num_banks: usize, rows: usize, words: usize) -> Result<CodeLayout> {
    if num_banks == 0 {
        return Err(Error::config("banks", "must be at least 1"));
    }
    if num_banks > 32 {
        return Err(Error::config("banks", "at most 32 data banks"));
    }
    check_dims(rows, words)?;
    let groups = (0..num_banks).map(BankSet::single).collect();
    let mut l = CodeLayout::assemble(Scheme::Uncoded, num_banks, rows, words, 1.0, Vec::new(), 0, groups);
    l.coded_rows = 0;
    Ok(l)
}

/// Pairwise XOR parities for one 4-bank group, in the order
/// `ab, bc, cd, ad, bd, ac`.
fn pair_order(g: [usize; 4]) -> [BankSet; 6] {
    let [a, b, c, d] = g;
    [
        BankSet::of(&[a, b]),
        BankSet::of(&[b, c]),
        BankSet::of(&[c, d]),
        BankSet::of(&[a, d]),
        BankSet::of(&[b, d]),
        BankSet::of(&[a, c]),
    ]
}

/// 8 data banks in two groups of four; six pairwise parities per group.
pub fn build_scheme_i(rows: usize, words: usize, alpha: f64) -> Result<CodeLayout> {
    check_dims(rows, words)?;
    let depth = check_alpha(alpha, rows)?;
    let groups = [[0, 1, 2, 3], [4, 5, 6, 7]];
    let sets = groups
        .iter()
        .flat_map(|g| pair_order(*g).into_iter().map(|s| vec![s]))
        .collect();
    Ok(CodeLayout::assemble(
        Scheme::SchemeI,
        8,
        rows,
        words,
        alpha,
        sets,
        depth,
        vec![BankSet::of(&groups[0]), BankSet::of(&groups[1])],
    ))
}

/// 8 data banks in two groups of four; five double-depth parity banks per
/// group holding the six pairwise parities and four replicas.
pub fn build_scheme_ii(rows: usize, words: usize, alpha: f64) -> Result<CodeLayout> {
    check_dims(rows, words)?;
    let depth = check_alpha(alpha, rows)?;
    let groups = [[0, 1, 2, 3], [4, 5, 6, 7]];
    let mut sets = Vec::new();
    for &[a, b, c, d] in &groups {
        let s = |x: &[usize]| BankSet::of(x);
        // every data bank meets four distinct parity banks
        sets.push(vec![s(&[a, b]), s(&[c, d])]);
        sets.push(vec![s(&[a, c]), s(&[b, d])]);
        sets.push(vec![s(&[a, d]), s(&[b, c])]);
        sets.push(vec![s(&[a]), s(&[b])]);
        sets.push(vec![s(&[c]), s(&[d])]);
    }
    Ok(CodeLayout::assemble(
        Scheme::SchemeII,
        8,
        rows,
        words,
        alpha,
        sets,
        depth,
        vec![BankSet::of(&groups[0]), BankSet::of(&groups[1])],
    ))
}

/// Nine data banks on a 3x3 grid `a b c / d e f / g h z` with row, column and
/// diagonal triple parities. With `num_banks = 8` bank `z` is dropped and
/// treated as all-zero in every parity that mentions it.
pub fn build_scheme_iii(rows: usize, words: usize, alpha: f64, num_banks: usize) -> Result<CodeLayout> {
    check_dims(rows, words)?;
    if num_banks != 8 && num_banks != 9 {
        return Err(Error::config("banks", format!("scheme III needs 8 or 9 data banks, got {num_banks}")));
    }
    let depth = check_alpha(alpha, rows)?;
    const Z: usize = 8;
    let triples: [[usize; 3]; 9] = [
        [0, 1, 2],
        [3, 4, 5],
        [6, 7, Z],
        [0, 3, 6],
        [1, 4, 7],
        [2, 5, Z],
        [0, 4, Z],
        [1, 5, 6],
        [2, 3, 7],
    ];
    let sets = triples
        .iter()
        .map(|t| {
            let kept: Vec<usize> = t.iter().copied().filter(|&b| b < num_banks).collect();
            vec![BankSet::of(&kept)]
        })
        .collect();
    let all = BankSet(((1u64 << num_banks) - 1) as u32);
    Ok(CodeLayout::assemble(
        Scheme::SchemeIII,
        num_banks,
        rows,
        words,
        alpha,
        sets,
        depth,
        vec![all],
    ))
}

/// `r * (w + 1)` full copies of every logical bank: the data bank itself plus
/// `r * (w + 1) - 1` replica banks, split into `r` disjoint copy groups.
pub fn build_replication(r: usize, w: usize, rows: usize, words: usize, num_logical_banks: usize) -> Result<CodeLayout> {
    if r == 0 {
        return Err(Error::config("r", "replication needs r >= 1"));
    }
    if num_logical_banks == 0 || num_logical_banks > 32 {
        return Err(Error::config("banks", "need between 1 and 32 logical banks"));
    }
    check_dims(rows, words)?;
    let copies = r * (w + 1);
    let mut sets = Vec::new();
    for b in 0..num_logical_banks {
        for _ in 1..copies {
            sets.push(vec![BankSet::single(b)]);
        }
    }
    let scheme = if w == 0 {
        Scheme::ReadReplication { r }
    } else {
        Scheme::RwReplication { r, w }
    };
    let groups = (0..num_logical_banks).map(BankSet::single).collect();
    let mut l = CodeLayout::assemble(scheme, num_logical_banks, rows, words, 1.0, sets, rows, groups);
    let n = num_logical_banks;
    for b in 0..num_logical_banks {
        // physical copies of bank b: the data bank, then its replicas
        let mut phys = vec![b];
        phys.extend((0..copies - 1).map(|k| n + b * (copies - 1) + k));
        for chunk in phys.chunks(w + 1) {
            l.copy_groups.push(chunk.to_vec());
        }
    }
    Ok(l)
}

/// Word-wise XOR of equally wide rows. An empty list gives the zero row.
pub fn xor_rows(width: usize, rows: &[&[Word]]) -> Result<Vec<Word>> {
    let mut out = vec![0; width];
    for r in rows {
        if r.len() != width {
            return Err(Error::Shape {
                expected: width,
                actual: r.len(),
            });
        }
        for (o, w) in out.iter_mut().zip(r.iter()) {
            *o ^= *w;
        }
    }
    Ok(out)
}

pub fn rate(layout: &CodeLayout) -> Rate {
    let data = (layout.num_data_banks * layout.rows) as u64;
    let parity: u64 = layout.parity_banks.iter().map(|p| p.depth_rows as u64).sum();
    Rate {
        data_rows: data,
        total_rows: data + parity,
    }
}

/// Whether the parity row at `loc` currently equals the XOR of its sources.
pub(crate) fn parity_is_consistent(seg: &ParitySegment, row: usize, status: &dyn StatusView) -> bool {
    seg.sources
        .iter()
        .all(|s| status.status(s, row) == RowStatus::AllFresh)
}

/// Reconstruction options for `target`: the direct read first (when the data
/// bank is fresh), then every plan that uses exactly one parity segment,
/// ordered by locality and then parity bank id. Stale copies are skipped; a
/// parity location holding the row verbatim yields a locality-1 plan.
pub fn degraded_read_plans(
    layout: &CodeLayout,
    rowmap: &RowMap,
    target: Address,
    status: &dyn StatusView,
) -> Vec<ReadPlan> {
    let row = target.row;
    let mut plans = Vec::new();
    let st = status.status(target.bank, row);
    if !matches!(st, RowStatus::ParityFresh(_)) {
        plans.push(ReadPlan {
            target,
            reads: vec![PhysicalRead {
                bank: target.bank,
                row,
            }],
        });
    }
    let Some(offset) = rowmap.offset(row) else {
        return plans;
    };
    let mut degraded = Vec::new();
    for (loc, seg) in layout.segments_covering(target.bank) {
        let prow = seg.row_offset + offset;
        if st == RowStatus::ParityFresh(loc) {
            degraded.push(ReadPlan {
                target,
                reads: vec![PhysicalRead { bank: loc.bank, row: prow }],
            });
            continue;
        }
        if !parity_is_consistent(seg, row, status) {
            continue;
        }
        let mut reads: Vec<PhysicalRead> = seg
            .sources
            .iter()
            .filter(|&b| b != target.bank)
            .map(|b| PhysicalRead { bank: b, row })
            .collect();
        reads.push(PhysicalRead { bank: loc.bank, row: prow });
        degraded.push(ReadPlan { target, reads });
    }
    degraded.sort_by_key(|p| (p.locality(), p.reads.last().map(|r| r.bank)));
    plans.extend(degraded);
    plans
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(l: &CodeLayout, p: &ReadPlan) -> Vec<String> {
        p.banks().map(|b| l.bank_name(b)).collect()
    }

    #[test]
    fn scheme_names_round_trip() {
        use alloc::string::ToString;
        for s in [
            Scheme::Uncoded,
            Scheme::SchemeI,
            Scheme::SchemeII,
            Scheme::SchemeIII,
            Scheme::ReadReplication { r: 3 },
            Scheme::RwReplication { r: 2, w: 1 },
        ] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert!("IV".parse::<Scheme>().is_err());
        assert!("repx".parse::<Scheme>().is_err());
    }

    #[test]
    fn uncoded_has_no_parity_and_unit_rate() {
        let l = build_uncoded(8, 1024, 16).unwrap();
        assert_eq!(l.num_data_banks(), 8);
        assert_eq!(l.num_parity_banks(), 0);
        assert_eq!(rate(&l).value(), 1.0);
        let rm = RowMap::for_layout(&l);
        let plans = degraded_read_plans(&l, &rm, Address::new(3, 17, 0), &AllFresh);
        assert_eq!(plans.len(), 1);
        assert!(plans[0].is_direct());
    }

    #[test]
    fn zero_dimensions_are_rejected() {
        assert!(build_uncoded(0, 4, 4).is_err());
        assert!(build_uncoded(4, 0, 4).is_err());
        assert!(build_uncoded(4, 4, 0).is_err());
    }

    #[test]
    fn scheme_i_structure_and_rate() {
        let l = build_scheme_i(1024, 16, 1.0).unwrap();
        assert_eq!(l.num_parity_banks(), 12);
        assert!(l.parity_banks().iter().all(|p| p.depth_rows == 1024));
        assert!((rate(&l).value() - 0.4).abs() < 1e-12);
        let l = build_scheme_i(1000, 16, 0.15).unwrap();
        assert!((rate(&l).value() - 2.0 / 2.45).abs() < 1e-12);
    }

    #[test]
    fn scheme_i_group_one_pairs() {
        let l = build_scheme_i(64, 4, 1.0).unwrap();
        let pairs: Vec<String> = l.parity_banks()[..6]
            .iter()
            .map(|p| p.segments[0].sources.iter().map(|b| l.bank_name(b)).collect())
            .collect();
        assert_eq!(pairs, ["ab", "bc", "cd", "ad", "bd", "ac"]);
    }

    #[test]
    fn alpha_out_of_range_is_invalid_config() {
        for a in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(build_scheme_i(1024, 16, a), Err(Error::InvalidConfig { field: "alpha", .. })));
            assert!(build_scheme_ii(1024, 16, a).is_err());
            assert!(build_scheme_iii(1024, 16, a, 9).is_err());
        }
        // alpha * L < 1
        assert!(build_scheme_i(10, 4, 0.05).is_err());
    }

    #[test]
    fn scheme_ii_rate_and_overhead() {
        let l = build_scheme_ii(1024, 16, 1.0).unwrap();
        assert!((rate(&l).value() - 2.0 / 7.0).abs() < 1e-12);
        let l = build_scheme_ii(1000, 16, 0.25).unwrap();
        let parity: usize = l.parity_banks().iter().map(|p| p.depth_rows).sum();
        assert_eq!(parity, 5000);
        let l = build_scheme_ii(1000, 16, 0.5).unwrap();
        assert!((rate(&l).value() - 2.0 / 4.5).abs() < 1e-12);
    }

    #[test]
    fn scheme_ii_every_bank_meets_four_parity_banks() {
        let l = build_scheme_ii(64, 4, 1.0).unwrap();
        for b in 0..8 {
            let mut banks: Vec<usize> = l.segments_covering(b).map(|(loc, _)| loc.bank).collect();
            assert_eq!(banks.len(), 4);
            banks.dedup();
            assert_eq!(banks.len(), 4, "bank {b} shares a parity bank between two of its segments");
        }
    }

    #[test]
    fn scheme_iii_rate_and_plans() {
        let l = build_scheme_iii(1000, 16, 1.0, 9).unwrap();
        assert!((rate(&l).value() - 0.5).abs() < 1e-12);
        let l15 = build_scheme_iii(1000, 16, 0.15, 9).unwrap();
        assert!((rate(&l15).value() - 1.0 / 1.15).abs() < 1e-12);

        let rm = RowMap::for_layout(&l);
        let plans = degraded_read_plans(&l, &rm, Address::new(0, 5, 0), &AllFresh);
        let got: Vec<Vec<String>> = plans.iter().map(|p| names(&l, p)).collect();
        assert_eq!(got, [vec!["a"], vec!["b", "c", "P0"], vec!["d", "g", "P3"], vec!["e", "z", "P6"]]);
        assert!(plans[1..].iter().all(|p| p.locality() == 3));
    }

    #[test]
    fn scheme_iii_with_eight_banks_drops_z() {
        let l = build_scheme_iii(64, 4, 1.0, 8).unwrap();
        assert_eq!(l.num_data_banks(), 8);
        for p in l.parity_banks() {
            assert!(!p.segments[0].sources.contains(8));
        }
        let rm = RowMap::for_layout(&l);
        let plans = degraded_read_plans(&l, &rm, Address::new(0, 3, 0), &AllFresh);
        assert_eq!(plans.len(), 4);
        // a+e+z becomes a+e
        assert_eq!(plans[1].locality(), 2);
    }

    #[test]
    fn replication_shapes() {
        let l = build_replication(2, 1, 64, 4, 2).unwrap();
        assert_eq!(l.num_physical_banks(), 8);
        assert_eq!(l.copy_groups().len(), 4);
        assert!(l.copy_groups().iter().all(|g| g.len() == 2));
        assert_eq!(rate(&l), Rate { data_rows: 128, total_rows: 512 });
        let l = build_replication(2, 0, 64, 4, 2).unwrap();
        assert_eq!(l.num_physical_banks(), 4);
        assert!(build_replication(0, 1, 64, 4, 2).is_err());
    }

    #[test]
    fn xor_rows_identities() {
        let x = [1u64, 2, 3];
        assert_eq!(xor_rows(3, &[&x]).unwrap(), x);
        assert_eq!(xor_rows(3, &[&x, &x]).unwrap(), [0, 0, 0]);
        assert_eq!(xor_rows(3, &[]).unwrap(), [0, 0, 0]);
        let a = [0xdead_u64, 7, 9];
        let b = [0xbeef_u64, 1, 2];
        let p = xor_rows(3, &[&a, &b]).unwrap();
        assert_eq!(xor_rows(3, &[&a, &p]).unwrap(), b);
        assert!(matches!(xor_rows(3, &[&[1, 2]]), Err(Error::Shape { expected: 3, actual: 2 })));
    }

    #[test]
    fn scheme_i_plans_for_a() {
        let l = build_scheme_i(64, 4, 1.0).unwrap();
        let rm = RowMap::for_layout(&l);
        let plans = degraded_read_plans(&l, &rm, Address::new(0, 5, 0), &AllFresh);
        let got: Vec<Vec<String>> = plans.iter().map(|p| names(&l, p)).collect();
        assert_eq!(got, [vec!["a"], vec!["b", "P0"], vec!["d", "P3"], vec!["c", "P5"]]);
    }

    struct OneStale(usize, usize, RowStatus);
    impl StatusView for OneStale {
        fn status(&self, bank: usize, row: usize) -> RowStatus {
            if (bank, row) == (self.0, self.1) {
                self.2
            } else {
                RowStatus::AllFresh
            }
        }
    }

    #[test]
    fn stale_parities_are_excluded() {
        let l = build_scheme_i(64, 4, 1.0).unwrap();
        let rm = RowMap::for_layout(&l);
        let view = OneStale(0, 5, RowStatus::DataFresh);
        let plans = degraded_read_plans(&l, &rm, Address::new(0, 5, 0), &view);
        assert_eq!(plans.len(), 1);
        assert!(plans[0].is_direct());
        // b's plans through P(ab) vanish too
        let plans = degraded_read_plans(&l, &rm, Address::new(1, 5, 0), &view);
        assert!(plans.iter().all(|p| !p.banks().any(|b| b == 8)));
        // a parity holding the fresh copy is the only way in
        let holder = ParityLoc { bank: 8 + 3, segment: 0 };
        let view = OneStale(0, 5, RowStatus::ParityFresh(holder));
        let plans = degraded_read_plans(&l, &rm, Address::new(0, 5, 0), &view);
        assert_eq!(plans.len(), 1);
        assert_eq!(plans[0].reads, [PhysicalRead { bank: 11, row: 5 }]);
    }

    #[test]
    fn rows_outside_coded_range_only_read_directly() {
        let l = build_scheme_i(100, 4, 0.1).unwrap();
        let rm = RowMap::for_layout(&l);
        assert_eq!(degraded_read_plans(&l, &rm, Address::new(2, 9, 0), &AllFresh).len(), 4);
        assert_eq!(degraded_read_plans(&l, &rm, Address::new(2, 10, 0), &AllFresh).len(), 1);
    }

    #[test]
    fn describe_lists_one_segment_per_line() {
        let l = build_scheme_ii(8, 2, 0.5).unwrap();
        let d = l.describe();
        assert!(d.contains("P0 rows[0..4) = XOR(a,b)\n"));
        assert!(d.contains("P0 rows[4..8) = XOR(c,d)\n"));
        assert!(d.contains("P3 rows[0..4) = XOR(a)\n"));
        assert_eq!(d.lines().filter(|l| l.starts_with('P')).count(), 20);
    }
}
