//! Background recoding of stale rows through idle bank slots.
//!
//! A job covers one (group, row). It first gathers the fresh value of every
//! data bank in the group into its buffer, then writes back: data rows whose
//! latest value sits in a parity bank are restored first, then every parity
//! row of the group is rewritten. A write to the row restarts the job.

use alloc::vec;
use alloc::vec::Vec;

use super::{BankOp, CodeStatusTable, Purpose};
use crate::bankarray::RowMap;
use crate::codes::{CodeLayout, ParityLoc, RowStatus, Word};

#[derive(Clone, Debug)]
pub struct RecodeJob {
    pub group: usize,
    pub row: usize,
    pub created_cycle: u64,
    buffer: Vec<Option<Vec<Word>>>,
    parity_done: Vec<bool>,
}

impl RecodeJob {
    fn reset(&mut self) {
        self.buffer.iter_mut().for_each(|b| *b = None);
        self.parity_done.iter_mut().for_each(|d| *d = false);
    }
}

/// Read ops issued by the recoder this cycle whose results it must capture.
#[derive(Clone, Debug)]
pub(crate) struct Capture {
    pub op: usize,
    pub job: usize,
    pub member: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Recoder {
    jobs: Vec<RecodeJob>,
    /// Data banks of each group, and every parity location of each group.
    members: Vec<Vec<usize>>,
    locs: Vec<Vec<ParityLoc>>,
}

impl Recoder {
    pub fn new(layout: &CodeLayout) -> Self {
        let members = layout.groups().iter().map(|g| g.iter().collect()).collect();
        let n = layout.num_data_banks();
        let mut locs = vec![Vec::new(); layout.groups().len()];
        for p in layout.parity_banks() {
            let bank = n + p.id;
            for k in 0..p.segments.len() {
                locs[layout.parity_group(bank)].push(ParityLoc { bank, segment: k });
            }
        }
        Recoder {
            jobs: Vec::new(),
            members,
            locs,
        }
    }

    pub fn jobs(&self) -> &[RecodeJob] {
        &self.jobs
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    /// A write landed on (group, row): create a job, or restart the existing one.
    pub fn touch(&mut self, group: usize, row: usize, cycle: u64) {
        if let Some(j) = self.jobs.iter_mut().find(|j| j.group == group && j.row == row) {
            j.reset();
            return;
        }
        self.jobs.push(RecodeJob {
            group,
            row,
            created_cycle: cycle,
            buffer: vec![None; self.members[group].len()],
            parity_done: vec![false; self.locs[group].len()],
        });
    }

    /// Drops every job whose row lies in `[start, end)`.
    pub fn drop_rows(&mut self, start: usize, end: usize) {
        self.jobs.retain(|j| j.row < start || j.row >= end);
    }

    /// Assigns recode work to banks not yet in `used`, oldest job first.
    /// Status transitions for writes issued here are applied immediately.
    pub(crate) fn fill(
        &mut self,
        layout: &CodeLayout,
        rowmap: &RowMap,
        status: &mut CodeStatusTable,
        used: &mut [bool],
        ops: &mut Vec<BankOp>,
    ) -> Vec<Capture> {
        self.jobs.retain(|j| rowmap.is_coded(j.row));
        let mut captures = Vec::new();
        for (ji, job) in self.jobs.iter_mut().enumerate() {
            let row = job.row;
            let members = &self.members[job.group];
            if job.buffer.iter().any(Option::is_none) {
                for (mi, &s) in members.iter().enumerate() {
                    if job.buffer[mi].is_some() {
                        continue;
                    }
                    let (bank, prow) = match status.get(s, row) {
                        RowStatus::ParityFresh(loc) => {
                            let seg = layout.segment(loc);
                            (loc.bank, rowmap.physical_row(seg, row).expect("holder row is coded"))
                        }
                        _ => (s, row),
                    };
                    if used[bank] {
                        continue;
                    }
                    used[bank] = true;
                    captures.push(Capture {
                        op: ops.len(),
                        job: ji,
                        member: mi,
                    });
                    ops.push(BankOp {
                        purpose: Purpose::Recode,
                        ..BankOp::read(bank, prow)
                    });
                }
                continue;
            }

            let mut unrestored: Vec<ParityLoc> = Vec::new();
            for (mi, &s) in members.iter().enumerate() {
                if let RowStatus::ParityFresh(loc) = status.get(s, row) {
                    if used[s] {
                        unrestored.push(loc);
                        continue;
                    }
                    used[s] = true;
                    ops.push(BankOp {
                        purpose: Purpose::Recode,
                        ..BankOp::write(s, row, job.buffer[mi].clone().expect("buffered"))
                    });
                    status.set(s, row, RowStatus::DataFresh);
                }
            }
            for (li, &loc) in self.locs[job.group].iter().enumerate() {
                if job.parity_done[li] || used[loc.bank] || unrestored.contains(&loc) {
                    continue;
                }
                let seg = layout.segment(loc);
                let prow = rowmap.physical_row(seg, row).expect("coded row");
                let mut value = vec![0; layout.words()];
                for (mi, &s) in members.iter().enumerate() {
                    if seg.sources.contains(s) {
                        let b = job.buffer[mi].as_ref().expect("buffered");
                        value.iter_mut().zip(b).for_each(|(v, x)| *v ^= *x);
                    }
                }
                used[loc.bank] = true;
                ops.push(BankOp {
                    purpose: Purpose::Recode,
                    ..BankOp::write(loc.bank, prow, value)
                });
                job.parity_done[li] = true;
            }
            if unrestored.is_empty() && job.parity_done.iter().all(|&d| d) {
                for &s in members {
                    status.set(s, row, RowStatus::AllFresh);
                }
            }
        }
        captures
    }

    /// Stores captured read results and retires finished jobs.
    pub(crate) fn capture(&mut self, captures: &[Capture], results: &[(usize, Vec<Word>)], status: &CodeStatusTable) {
        for c in captures {
            if let Some((_, data)) = results.iter().find(|(op, _)| *op == c.op) {
                self.jobs[c.job].buffer[c.member] = Some(data.clone());
            }
        }
        let members = &self.members;
        self.jobs.retain(|j| {
            let finished = j.buffer.iter().all(Option::is_some)
                && j.parity_done.iter().all(|&d| d)
                && members[j.group].iter().all(|&s| status.get(s, j.row) == RowStatus::AllFresh);
            !finished
        });
    }
}
