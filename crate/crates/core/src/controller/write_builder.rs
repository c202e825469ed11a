//! Write pattern builder.
//!
//! Pass one commits the head of every write queue to its own data bank.
//! Pass two hands further writes, round robin over banks, to free parity
//! locations that cover the target row; such a location then holds the
//! row verbatim until the recoder restores it. Writes queued back to back
//! for the same row share one bank access; the last payload wins.

use alloc::vec;
use alloc::vec::Vec;

use super::queues::Queued;
use super::{BankOp, BankQueues, CodeStatusTable, Purpose};
use crate::bankarray::RowMap;
use crate::codes::{CodeLayout, RowStatus};

/// Served writes, in commit order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WriteCommit {
    pub request: u64,
    pub bank: usize,
    pub row: usize,
    /// Physical bank that received the value.
    pub physical: usize,
}

pub struct WriteSelection {
    pub ops: Vec<BankOp>,
    pub commits: Vec<WriteCommit>,
    pub served: Vec<usize>,
}

/// End of the run of same-row entries starting at `start`.
fn run_end(q: &alloc::collections::VecDeque<Queued>, start: usize) -> usize {
    let row = q[start].req.addr.row;
    let mut end = start + 1;
    while q.get(end).is_some_and(|e| e.req.addr.row == row) {
        end += 1;
    }
    end
}

fn access(q: &alloc::collections::VecDeque<Queued>, start: usize, end: usize, physical: usize, prow: usize) -> BankOp {
    BankOp {
        purpose: Purpose::Serve,
        requests: q.range(start..end).map(|e| e.req.id).collect(),
        ..BankOp::write(physical, prow, q[end - 1].req.payload.clone().unwrap_or_default())
    }
}

/// Commits the head run of every write queue whose data bank is still free.
/// Used on its own to drain writes into banks a read cycle leaves idle.
pub fn build_direct_writes(
    layout: &CodeLayout,
    rowmap: &RowMap,
    status: &mut CodeStatusTable,
    queues: &BankQueues,
    used: &mut [bool],
) -> WriteSelection {
    let n = layout.num_data_banks();
    let mut served = vec![0usize; n];
    let mut ops = Vec::new();
    let mut commits = Vec::new();
    for bank in 0..n {
        let q = queues.writes(bank);
        if q.is_empty() || used[bank] {
            continue;
        }
        let row = q[0].req.addr.row;
        let end = run_end(q, 0);
        used[bank] = true;
        ops.push(access(q, 0, end, bank, row));
        if rowmap.is_coded(row) {
            status.set(bank, row, RowStatus::DataFresh);
        }
        commits.extend(q.range(0..end).map(|e| WriteCommit {
            request: e.req.id,
            bank,
            row,
            physical: bank,
        }));
        served[bank] = end;
    }

    WriteSelection { ops, commits, served }
}

/// Builds a write pattern and applies the resulting status transitions to `status`.
pub fn build_write_pattern(
    layout: &CodeLayout,
    rowmap: &RowMap,
    status: &mut CodeStatusTable,
    queues: &BankQueues,
    used: &mut [bool],
    cap_per_bank: Option<usize>,
) -> WriteSelection {
    let n = layout.num_data_banks();
    let cap = cap_per_bank.unwrap_or(usize::MAX);
    if cap == 0 {
        return WriteSelection {
            ops: Vec::new(),
            commits: Vec::new(),
            served: vec![0; n],
        };
    }
    let WriteSelection {
        mut ops,
        mut commits,
        mut served,
    } = build_direct_writes(layout, rowmap, status, queues, used);
    let mut accesses: Vec<usize> = served.iter().map(|&s| usize::from(s > 0)).collect();

    let mut stuck = vec![false; n];
    loop {
        let mut progress = false;
        for bank in 0..n {
            if stuck[bank] || accesses[bank] >= cap || served[bank] == 0 {
                continue;
            }
            let q = queues.writes(bank);
            let Some(e) = q.get(served[bank]) else {
                stuck[bank] = true;
                continue;
            };
            let row = e.req.addr.row;
            if !rowmap.accepts_parity_writes(row) {
                stuck[bank] = true;
                continue;
            }
            let found = layout.segments_covering(bank).find(|(loc, seg)| {
                !used[loc.bank]
                    && seg
                        .sources
                        .iter()
                        .all(|s| s == bank || status.get(s, row) != RowStatus::ParityFresh(*loc))
            });
            let Some((loc, seg)) = found else {
                stuck[bank] = true;
                continue;
            };
            let prow = rowmap.physical_row(seg, row).expect("coded row");
            let (start, end) = (served[bank], run_end(q, served[bank]));
            used[loc.bank] = true;
            ops.push(access(q, start, end, loc.bank, prow));
            status.set(bank, row, RowStatus::ParityFresh(loc));
            commits.extend(q.range(start..end).map(|e| WriteCommit {
                request: e.req.id,
                bank,
                row,
                physical: loc.bank,
            }));
            served[bank] = end;
            accesses[bank] += 1;
            progress = true;
        }
        if !progress {
            break;
        }
    }
    WriteSelection { ops, commits, served }
}
