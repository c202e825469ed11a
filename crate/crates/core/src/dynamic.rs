//! Dynamic coding unit.
//!
//! Every bank is split into regions of `ceil(r * L)` rows. Access counts are
//! kept per region; every `period` memory cycles the hottest regions are
//! selected, and one unselected-but-hot region at a time is encoded into a
//! spare parity slot using idle bank slots. Finished encodes become active
//! immediately when there is room, otherwise the least frequently used
//! active region is retired and its slot becomes the new spare.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bankarray::RowMap;
use crate::codes::{CodeLayout, ParityLoc, Word};
use crate::controller::{BankOp, CodeStatusTable, Purpose, Recoder};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicConfig {
    /// Region size as a fraction of a bank.
    pub r: f64,
    /// Selection period in memory cycles.
    pub period: u64,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig { r: 0.05, period: 10_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RegionStats {
    pub period: Vec<u64>,
    pub lifetime: Vec<u64>,
}

#[derive(Clone, Debug)]
struct RowTask {
    row: usize,
    group: usize,
    buffer: Vec<Option<Vec<Word>>>,
    written: Vec<bool>,
}

impl RowTask {
    fn done(&self) -> bool {
        self.written.iter().all(|&w| w)
    }

    fn reset(&mut self) {
        self.buffer.iter_mut().for_each(|b| *b = None);
        self.written.iter_mut().for_each(|w| *w = false);
    }
}

#[derive(Clone, Debug)]
struct Encode {
    region: usize,
    tasks: Vec<RowTask>,
    victim: Option<usize>,
}

#[derive(Clone, Debug)]
pub(crate) struct EncodeCapture {
    op: usize,
    task: usize,
    member: usize,
}

#[derive(Clone, Debug)]
pub struct DynamicUnit {
    cfg: DynamicConfig,
    rows: usize,
    region_rows: usize,
    region_count: usize,
    capacity: usize,
    stats: RegionStats,
    /// Active regions and the slot each occupies.
    active: Vec<(usize, usize)>,
    scratch: usize,
    encode: Option<Encode>,
    switches: u64,
    last_period: u64,
}

impl DynamicUnit {
    pub fn new(rows: usize, alpha: f64, cfg: DynamicConfig) -> Result<Self> {
        if !(cfg.r > 0.0 && cfg.r <= 1.0) {
            return Err(Error::config("r", format!("{} is outside (0, 1]", cfg.r)));
        }
        if cfg.period == 0 {
            return Err(Error::config("period", "must be at least 1 memory cycle"));
        }
        let capacity = (alpha / cfg.r + 1e-9) as usize;
        if capacity == 0 {
            return Err(Error::config("r", format!("r = {} exceeds alpha = {alpha}", cfg.r)));
        }
        let region_rows = crate::codes::ceil_usize(cfg.r * rows as f64).max(1);
        let region_count = rows.div_ceil(region_rows);
        Ok(DynamicUnit {
            cfg,
            rows,
            region_rows,
            region_count,
            capacity: capacity.min(region_count),
            stats: RegionStats {
                period: vec![0; region_count],
                lifetime: vec![0; region_count],
            },
            active: Vec::new(),
            scratch: capacity.min(region_count),
            encode: None,
            switches: 0,
            last_period: 0,
        })
    }

    pub fn config(&self) -> DynamicConfig {
        self.cfg
    }
    pub fn region_rows(&self) -> usize {
        self.region_rows
    }
    pub fn region_count(&self) -> usize {
        self.region_count
    }
    /// Maximum number of simultaneously active regions, `floor(alpha / r)`.
    pub fn capacity(&self) -> usize {
        self.capacity
    }
    /// Rows per parity segment: active slots plus the scratch slot.
    pub fn segment_depth(&self) -> usize {
        (self.capacity + 1) * self.region_rows
    }
    pub fn stats(&self) -> &RegionStats {
        &self.stats
    }
    /// Number of encodes started.
    pub fn switches(&self) -> u64 {
        self.switches
    }
    pub fn active_regions(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.active.iter().map(|&(r, _)| r).collect();
        v.sort_unstable();
        v
    }
    pub fn encoding(&self) -> Option<usize> {
        self.encode.as_ref().map(|e| e.region)
    }
    pub fn is_idle(&self) -> bool {
        self.encode.is_none()
    }

    pub fn initial_rowmap(&self) -> RowMap {
        RowMap::regions(self.region_rows, self.region_count)
    }

    pub fn region_of(&self, row: usize) -> usize {
        row / self.region_rows
    }

    fn region_span(&self, region: usize) -> (usize, usize) {
        let start = region * self.region_rows;
        (start, (start + self.region_rows).min(self.rows))
    }

    pub fn record_access(&mut self, row: usize) {
        let r = self.region_of(row);
        self.stats.period[r] += 1;
        self.stats.lifetime[r] += 1;
    }

    /// Hottest regions of the current period, at most `capacity`. Regions
    /// with no accesses are only kept if already active; ties go to active
    /// regions, then to the lower index.
    pub fn select_regions(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.region_count)
            .filter(|&r| self.stats.period[r] > 0 || self.is_active(r))
            .collect();
        order.sort_by_key(|&r| (core::cmp::Reverse(self.stats.period[r]), !self.is_active(r), r));
        order.truncate(self.capacity);
        order
    }

    pub fn is_active(&self, region: usize) -> bool {
        self.active.iter().any(|&(r, _)| r == region)
    }

    /// Period bookkeeping; called at the start of every memory cycle.
    pub(crate) fn on_cycle(&mut self, cycle: u64, _rowmap: &RowMap) {
        let period = cycle / self.cfg.period;
        if period == self.last_period {
            return;
        }
        self.last_period = period;
        let selected = self.select_regions();
        if self.encode.is_none() {
            if let Some(&region) = selected.iter().find(|&&r| !self.is_active(r)) {
                self.start_encode(region);
            }
        }
        self.stats.period.iter_mut().for_each(|c| *c = 0);
    }

    /// Starts encoding a region into the scratch slot. Used by the period
    /// logic and available to tests that script the unit directly.
    pub fn start_encode(&mut self, region: usize) {
        if self.encode.is_some() || self.is_active(region) || region >= self.region_count {
            return;
        }
        self.switches += 1;
        self.encode = Some(Encode {
            region,
            tasks: Vec::new(),
            victim: None,
        });
    }

    /// A write to `row` invalidates any encoding progress on that row.
    pub(crate) fn notify_write(&mut self, row: usize) {
        if let Some(e) = &mut self.encode {
            for t in e.tasks.iter_mut().filter(|t| t.row == row) {
                t.reset();
            }
        }
    }

    fn ensure_tasks(&mut self, layout: &CodeLayout) {
        let (start, end) = self.region_span(self.encode.as_ref().map_or(0, |e| e.region));
        let Some(e) = &mut self.encode else { return };
        if !e.tasks.is_empty() {
            return;
        }
        let n = layout.num_data_banks();
        for row in start..end {
            for (g, members) in layout.groups().iter().enumerate() {
                let segs = layout
                    .parity_banks()
                    .iter()
                    .filter(|p| layout.parity_group(n + p.id) == g)
                    .map(|p| p.segments.len())
                    .sum();
                e.tasks.push(RowTask {
                    row,
                    group: g,
                    buffer: vec![None; members.len()],
                    written: vec![false; segs],
                });
            }
        }
    }

    /// Uses banks left free by the scheduler and the recoder to advance the encode.
    pub(crate) fn fill(
        &mut self,
        layout: &CodeLayout,
        _rowmap: &RowMap,
        used: &mut [bool],
        ops: &mut Vec<BankOp>,
    ) -> Vec<EncodeCapture> {
        self.ensure_tasks(layout);
        let scratch = self.scratch;
        let rr = self.region_rows;
        let Some(e) = &mut self.encode else {
            return Vec::new();
        };
        let n = layout.num_data_banks();
        let mut captures = Vec::new();
        for (ti, t) in e.tasks.iter_mut().enumerate() {
            if t.done() {
                continue;
            }
            if used.iter().all(|&u| u) {
                break;
            }
            let members = layout.groups()[t.group];
            if t.buffer.iter().any(Option::is_none) {
                for (mi, s) in members.iter().enumerate() {
                    if t.buffer[mi].is_none() && !used[s] {
                        used[s] = true;
                        captures.push(EncodeCapture {
                            op: ops.len(),
                            task: ti,
                            member: mi,
                        });
                        ops.push(BankOp {
                            purpose: Purpose::Encode,
                            ..BankOp::read(s, t.row)
                        });
                    }
                }
                continue;
            }
            let mut k = 0;
            for p in layout.parity_banks() {
                let bank = n + p.id;
                if layout.parity_group(bank) != t.group {
                    continue;
                }
                for seg in &p.segments {
                    if !t.written[k] && !used[bank] {
                        let mut value = vec![0; layout.words()];
                        for (mi, s) in members.iter().enumerate() {
                            if seg.sources.contains(s) {
                                let b = t.buffer[mi].as_ref().expect("buffered");
                                value.iter_mut().zip(b).for_each(|(v, x)| *v ^= *x);
                            }
                        }
                        used[bank] = true;
                        let prow = seg.row_offset + scratch * rr + t.row % rr;
                        ops.push(BankOp {
                            purpose: Purpose::Encode,
                            ..BankOp::write(bank, prow, value)
                        });
                        t.written[k] = true;
                    }
                    k += 1;
                }
            }
        }
        captures
    }

    pub(crate) fn capture(&mut self, captures: &[EncodeCapture], results: &[(usize, Vec<Word>)]) {
        let Some(e) = &mut self.encode else { return };
        for c in captures {
            if let Some((_, data)) = results.iter().find(|(op, _)| *op == c.op) {
                e.tasks[c.task].buffer[c.member] = Some(data.clone());
            }
        }
    }

    /// Activates a finished encode, retiring the LFU region when full.
    pub(crate) fn after_cycle(&mut self, rowmap: &mut RowMap, status: &mut CodeStatusTable, recoder: &mut Recoder) {
        let Some(e) = &self.encode else { return };
        if e.tasks.is_empty() || !e.tasks.iter().all(RowTask::done) {
            return;
        }
        let region = e.region;
        let RowMap::Regions { slots, draining, .. } = rowmap else {
            return;
        };
        if self.active.len() < self.capacity {
            slots[region] = Some(self.scratch);
            self.active.push((region, self.scratch));
            let taken: Vec<usize> = self.active.iter().map(|&(_, s)| s).collect();
            self.scratch = (0..=self.capacity).find(|s| !taken.contains(s)).expect("a free slot remains");
            self.encode = None;
            return;
        }
        let victim = match e.victim {
            Some(v) => v,
            None => {
                let v = self
                    .active
                    .iter()
                    .map(|&(r, _)| r)
                    .min_by_key(|&r| (self.stats.lifetime[r], r))
                    .expect("capacity is at least one");
                if let Some(e) = &mut self.encode {
                    e.victim = Some(v);
                }
                *draining = Some(v);
                v
            }
        };
        let (start, end) = self.region_span(victim);
        if status.any_parity_fresh(start, end) {
            return;
        }
        status.reset_rows(start, end);
        recoder.drop_rows(start, end);
        let pos = self.active.iter().position(|&(r, _)| r == victim).expect("victim is active");
        let (_, freed) = self.active.remove(pos);
        slots[victim] = None;
        slots[region] = Some(self.scratch);
        *draining = None;
        self.active.push((region, self.scratch));
        self.scratch = freed;
        self.encode = None;
    }

    /// Parity location of `loc` at scratch offset for `row` (test helper).
    pub fn scratch_row(&self, layout: &CodeLayout, loc: ParityLoc, row: usize) -> usize {
        layout.segment(loc).row_offset + self.scratch * self.region_rows + row % self.region_rows
    }
}
