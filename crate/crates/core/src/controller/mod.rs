//! The coded memory controller: core arbiter, per-bank queues, access
//! scheduler with read and write pattern builders, code status table and
//! recoding unit.

mod queues;
mod read_builder;
mod recoder;
mod status;
mod write_builder;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use queues::{BankQueues, Queued};
pub use read_builder::{build_read_pattern, ReadSelection};
pub use recoder::{RecodeJob, Recoder};
pub use status::{CodeStatusTable, StatusKind};
pub use write_builder::{build_direct_writes, build_write_pattern, WriteCommit, WriteSelection};

use crate::bankarray::{BankState, RowMap};
use crate::codes::{Address, CodeLayout, ReadPlan, RowStatus, Word};
use crate::dynamic::{DynamicConfig, DynamicUnit};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessRequest {
    pub id: u64,
    pub core: usize,
    pub kind: AccessKind,
    pub addr: Address,
    pub issue_time: u64,
    /// Full-row value for writes.
    pub payload: Option<Vec<Word>>,
    pub txn_id: u64,
    pub is_critical: bool,
}

impl AccessRequest {
    pub fn read(id: u64, core: usize, addr: Address, issue_time: u64) -> Self {
        AccessRequest {
            id,
            core,
            kind: AccessKind::Read,
            addr,
            issue_time,
            payload: None,
            txn_id: id,
            is_critical: true,
        }
    }

    pub fn write(id: u64, core: usize, addr: Address, issue_time: u64, payload: Vec<Word>) -> Self {
        AccessRequest {
            id,
            core,
            kind: AccessKind::Write,
            addr,
            issue_time,
            payload: Some(payload),
            txn_id: id,
            is_critical: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OpKind {
    Read,
    Write,
    Refresh,
}

/// Why a bank is busy this cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Serve,
    Recode,
    Encode,
    Refresh,
}

/// One operation on one physical bank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BankOp {
    pub bank: usize,
    pub row: usize,
    pub kind: OpKind,
    pub purpose: Purpose,
    pub data: Option<Vec<Word>>,
    pub requests: Vec<u64>,
}

impl BankOp {
    pub fn read(bank: usize, row: usize) -> Self {
        BankOp {
            bank,
            row,
            kind: OpKind::Read,
            purpose: Purpose::Serve,
            data: None,
            requests: Vec::new(),
        }
    }

    pub fn write(bank: usize, row: usize, data: Vec<Word>) -> Self {
        BankOp {
            bank,
            row,
            kind: OpKind::Write,
            purpose: Purpose::Serve,
            data: Some(data),
            requests: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeRecipe {
    pub request: u64,
    pub plan: ReadPlan,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CycleMode {
    Read,
    Write,
    #[default]
    RecodeOnly,
}

impl fmt::Display for CycleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CycleMode::Read => "R",
            CycleMode::Write => "W",
            CycleMode::RecodeOnly => "RC",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccessPattern {
    pub cycle: u64,
    pub mode: CycleMode,
    pub ops: Vec<BankOp>,
    pub recipes: Vec<DecodeRecipe>,
}

impl AccessPattern {
    /// Ops issued on behalf of requests (as opposed to recoding, encoding or refresh).
    pub fn serving_ops(&self) -> impl Iterator<Item = &BankOp> {
        self.ops.iter().filter(|o| o.purpose == Purpose::Serve)
    }
}

/// A read served this cycle and the value it returned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServedRead {
    pub request: AccessRequest,
    pub data: Vec<Word>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CycleOutcome {
    pub pattern: AccessPattern,
    pub reads: Vec<ServedRead>,
    pub writes: Vec<AccessRequest>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerConfig {
    pub queue_depth: usize,
    /// Fraction of queue depth at which writes take priority.
    pub write_threshold: f64,
    /// Writes served per bank queue per cycle; `None` lets a bank use every
    /// free parity location covering it.
    pub write_cap_per_bank: Option<usize>,
    /// In read cycles, data banks the read pattern leaves free commit the
    /// head of their write queue.
    pub idle_write_drain: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            queue_depth: 10,
            write_threshold: 0.8,
            write_cap_per_bank: None,
            idle_write_drain: true,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.queue_depth == 0 {
            return Err(Error::config("queue_depth", "must be at least 1"));
        }
        if !(self.write_threshold > 0.0 && self.write_threshold <= 1.0) {
            return Err(Error::config("write_threshold", "must be in (0, 1]"));
        }
        Ok(())
    }

    /// Queue occupancy that forces a write cycle.
    pub fn write_trigger(&self) -> usize {
        let t = crate::codes::ceil_usize(self.write_threshold * self.queue_depth as f64);
        t.max(1)
    }
}

#[derive(Clone, Debug)]
pub struct Controller {
    layout: CodeLayout,
    cfg: ControllerConfig,
    queues: BankQueues,
    status: CodeStatusTable,
    banks: BankState,
    rowmap: RowMap,
    recoder: Recoder,
    dynamic: Option<DynamicUnit>,
}

impl Controller {
    pub fn new(layout: CodeLayout, cfg: ControllerConfig) -> Result<Self> {
        cfg.validate()?;
        if layout.num_physical_banks() > 128 {
            return Err(Error::config("banks", "at most 128 physical banks"));
        }
        let rowmap = RowMap::for_layout(&layout);
        Ok(Controller {
            queues: BankQueues::new(layout.num_data_banks(), cfg.queue_depth),
            status: CodeStatusTable::new(layout.num_data_banks(), layout.rows()),
            banks: BankState::new(&layout),
            recoder: Recoder::new(&layout),
            rowmap,
            layout,
            cfg,
            dynamic: None,
        })
    }

    /// Controller whose parity space is managed region by region. The
    /// layout's segments are resized to hold the active regions plus one
    /// scratch region.
    pub fn with_dynamic(layout: CodeLayout, cfg: ControllerConfig, dynamic: DynamicConfig) -> Result<Self> {
        if layout.num_parity_banks() == 0 {
            return Err(Error::config("dynamic", "needs a layout with parity banks"));
        }
        let unit = DynamicUnit::new(layout.rows(), layout.alpha(), dynamic)?;
        let layout = layout.with_segment_depth(unit.segment_depth());
        let mut c = Controller::new(layout, cfg)?;
        c.rowmap = unit.initial_rowmap();
        c.dynamic = Some(unit);
        Ok(c)
    }

    /// Loads a bank-major data image and encodes parities for coded rows.
    pub fn load_image(&mut self, image: &[Word]) -> Result<()> {
        self.banks.initialize_from_oracle(&self.layout, &self.rowmap, image)
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }
    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }
    pub fn queues(&self) -> &BankQueues {
        &self.queues
    }
    pub fn status(&self) -> &CodeStatusTable {
        &self.status
    }
    pub fn banks(&self) -> &BankState {
        &self.banks
    }
    pub fn rowmap(&self) -> &RowMap {
        &self.rowmap
    }
    pub fn recoder(&self) -> &Recoder {
        &self.recoder
    }
    pub fn dynamic(&self) -> Option<&DynamicUnit> {
        self.dynamic.as_ref()
    }

    /// Arbiter entry point. A full queue hands the request back (the core stalls).
    pub fn push(&mut self, req: AccessRequest) -> core::result::Result<(), AccessRequest> {
        let row = req.addr.row;
        self.queues.push(req)?;
        if let Some(d) = &mut self.dynamic {
            d.record_access(row);
        }
        Ok(())
    }

    pub fn push_refresh(&mut self, bank: usize, row: usize) {
        self.queues.push_special(bank, row);
    }

    pub fn has_pending_requests(&self) -> bool {
        self.queues.reads_pending() || self.queues.writes_pending()
    }

    /// No queued requests and no background work left.
    pub fn is_quiescent(&self) -> bool {
        self.queues.is_empty()
            && self.recoder.is_empty()
            && self.dynamic.as_ref().is_none_or(DynamicUnit::is_idle)
    }

    /// Whether background units have work that idle cycles would advance.
    pub fn has_background_work(&self) -> bool {
        !self.recoder.is_empty()
            || !self.queues.is_empty()
            || self.dynamic.as_ref().is_some_and(|d| !d.is_idle())
    }

    /// Latest value of a data row, resolved through the status table.
    pub fn logical_row(&self, bank: usize, row: usize) -> &[Word] {
        match self.status.get(bank, row) {
            RowStatus::ParityFresh(loc) => {
                let seg = self.layout.segment(loc);
                let prow = self.rowmap.physical_row(seg, row).expect("holder row is coded");
                self.banks.row(loc.bank, prow)
            }
            _ => self.banks.row(bank, row),
        }
    }

    /// Which kind of cycle the scheduler would run now.
    pub fn next_mode(&self) -> CycleMode {
        let q = &self.queues;
        if q.max_write_occupancy() >= self.cfg.write_trigger() || (!q.reads_pending() && q.writes_pending()) {
            CycleMode::Write
        } else if q.reads_pending() {
            CycleMode::Read
        } else {
            CycleMode::RecodeOnly
        }
    }

    /// Runs one memory cycle: picks a mode, builds and applies the pattern,
    /// then hands leftover banks to the recoder, the dynamic encoder and the
    /// special queue.
    pub fn schedule_cycle(&mut self, cycle: u64) -> Result<CycleOutcome> {
        if let Some(d) = &mut self.dynamic {
            d.on_cycle(cycle, &self.rowmap);
        }
        let nphys = self.layout.num_physical_banks();
        let mut used = vec![false; nphys];
        let mode = self.next_mode();
        let mut pattern = AccessPattern {
            cycle,
            mode,
            ..AccessPattern::default()
        };
        let (reads, writes) = match mode {
            CycleMode::Read => {
                let sel = build_read_pattern(&self.layout, &self.rowmap, &self.status, &self.queues, &mut used);
                pattern.ops = sel.ops;
                pattern.recipes = sel.recipes;
                let mut popped = Vec::new();
                for (bank, &k) in sel.served.iter().enumerate() {
                    for _ in 0..k {
                        popped.push(self.queues.reads_mut(bank).pop_front().expect("served read").req);
                    }
                }
                let mut written = Vec::new();
                if self.cfg.idle_write_drain && self.cfg.write_cap_per_bank != Some(0) {
                    let sel = build_direct_writes(&self.layout, &self.rowmap, &mut self.status, &self.queues, &mut used);
                    pattern.ops.extend(sel.ops);
                    written = self.commit_writes(&sel.commits, cycle);
                }
                (popped, written)
            }
            CycleMode::Write => {
                let sel = build_write_pattern(
                    &self.layout,
                    &self.rowmap,
                    &mut self.status,
                    &self.queues,
                    &mut used,
                    self.cfg.write_cap_per_bank,
                );
                pattern.ops = sel.ops;
                (Vec::new(), self.commit_writes(&sel.commits, cycle))
            }
            CycleMode::RecodeOnly => (Vec::new(), Vec::new()),
        };
        self.finish(pattern, &mut used, reads, writes)
    }

    /// Pops committed writes in commit order and schedules their recoding.
    fn commit_writes(&mut self, commits: &[WriteCommit], cycle: u64) -> Vec<AccessRequest> {
        let mut written = Vec::with_capacity(commits.len());
        for c in commits {
            if self.rowmap.is_coded(c.row) {
                self.recoder.touch(self.layout.group_of(c.bank), c.row, cycle);
            }
            if let Some(d) = &mut self.dynamic {
                d.notify_write(c.row);
            }
            let e = self.queues.writes_mut(c.bank).pop_front().expect("served write");
            debug_assert_eq!(e.req.id, c.request);
            written.push(e.req);
        }
        written
    }

    fn finish(
        &mut self,
        mut pattern: AccessPattern,
        used: &mut [bool],
        served_reads: Vec<AccessRequest>,
        writes: Vec<AccessRequest>,
    ) -> Result<CycleOutcome> {
        let rc = self
            .recoder
            .fill(&self.layout, &self.rowmap, &mut self.status, used, &mut pattern.ops);
        let enc = match &mut self.dynamic {
            Some(d) => d.fill(&self.layout, &self.rowmap, used, &mut pattern.ops),
            None => Vec::new(),
        };
        let special = self.queues.special_mut();
        let mut keep = alloc::collections::VecDeque::new();
        while let Some((bank, row)) = special.pop_front() {
            if bank < used.len() && !used[bank] {
                used[bank] = true;
                pattern.ops.push(BankOp {
                    bank,
                    row,
                    kind: OpKind::Refresh,
                    purpose: Purpose::Refresh,
                    data: None,
                    requests: Vec::new(),
                });
            } else {
                keep.push_back((bank, row));
            }
        }
        *special = keep;

        let results = self.banks.apply_pattern(&pattern)?;
        let mut by_op: Vec<(usize, Vec<Word>)> = Vec::with_capacity(results.len());
        let mut it = results.into_iter();
        for (i, op) in pattern.ops.iter().enumerate() {
            if op.kind == OpKind::Read {
                by_op.push((i, it.next().expect("one result per read").data));
            }
        }

        let mut reads = Vec::with_capacity(served_reads.len());
        for req in served_reads {
            let recipe = pattern
                .recipes
                .iter()
                .find(|r| r.request == req.id)
                .expect("served read has a recipe");
            let mut value = vec![0; self.layout.words()];
            for pr in &recipe.plan.reads {
                let (_, data) = by_op
                    .iter()
                    .find(|(i, _)| {
                        let op = &pattern.ops[*i];
                        op.bank == pr.bank && op.row == pr.row
                    })
                    .expect("recipe read is in the pattern");
                value.iter_mut().zip(data).for_each(|(v, x)| *v ^= *x);
            }
            reads.push(ServedRead { request: req, data: value });
        }

        self.recoder.capture(&rc, &by_op, &self.status);
        if let Some(d) = &mut self.dynamic {
            d.capture(&enc, &by_op);
            d.after_cycle(&mut self.rowmap, &mut self.status, &mut self.recoder);
        }
        Ok(CycleOutcome { pattern, reads, writes })
    }
}
