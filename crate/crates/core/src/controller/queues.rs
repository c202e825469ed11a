use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::{AccessKind, AccessRequest};

/// A request sitting in a bank queue, stamped with its acceptance order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Queued {
    pub seq: u64,
    pub req: AccessRequest,
}

/// Per data bank read and write FIFOs plus the special (refresh) queue.
#[derive(Clone, Debug)]
pub struct BankQueues {
    depth: usize,
    reads: Vec<VecDeque<Queued>>,
    writes: Vec<VecDeque<Queued>>,
    special: VecDeque<(usize, usize)>,
    next_seq: u64,
}

impl BankQueues {
    pub fn new(banks: usize, depth: usize) -> Self {
        BankQueues {
            depth,
            reads: (0..banks).map(|_| VecDeque::with_capacity(depth)).collect(),
            writes: (0..banks).map(|_| VecDeque::with_capacity(depth)).collect(),
            special: VecDeque::new(),
            next_seq: 0,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_banks(&self) -> usize {
        self.reads.len()
    }

    /// Appends to the target queue, or hands the request back when that queue is full.
    pub fn push(&mut self, req: AccessRequest) -> Result<(), AccessRequest> {
        let q = match req.kind {
            AccessKind::Read => &mut self.reads[req.addr.bank],
            AccessKind::Write => &mut self.writes[req.addr.bank],
        };
        if q.len() >= self.depth {
            return Err(req);
        }
        q.push_back(Queued {
            seq: self.next_seq,
            req,
        });
        self.next_seq += 1;
        Ok(())
    }

    /// One arbiter step: at most one request per core, in core order.
    /// Returns the requests that stalled.
    pub fn arbiter_push(&mut self, requests: Vec<AccessRequest>) -> Vec<AccessRequest> {
        let mut order = requests;
        order.sort_by_key(|r| r.core);
        order.into_iter().filter_map(|r| self.push(r).err()).collect()
    }

    pub fn push_special(&mut self, bank: usize, row: usize) {
        self.special.push_back((bank, row));
    }

    pub fn reads(&self, bank: usize) -> &VecDeque<Queued> {
        &self.reads[bank]
    }

    pub fn writes(&self, bank: usize) -> &VecDeque<Queued> {
        &self.writes[bank]
    }

    pub(crate) fn reads_mut(&mut self, bank: usize) -> &mut VecDeque<Queued> {
        &mut self.reads[bank]
    }

    pub(crate) fn writes_mut(&mut self, bank: usize) -> &mut VecDeque<Queued> {
        &mut self.writes[bank]
    }

    pub(crate) fn special_mut(&mut self) -> &mut VecDeque<(usize, usize)> {
        &mut self.special
    }

    pub fn reads_pending(&self) -> bool {
        self.reads.iter().any(|q| !q.is_empty())
    }

    pub fn writes_pending(&self) -> bool {
        self.writes.iter().any(|q| !q.is_empty())
    }

    pub fn max_write_occupancy(&self) -> usize {
        self.writes.iter().map(VecDeque::len).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        !self.reads_pending() && !self.writes_pending() && self.special.is_empty()
    }

    pub fn len(&self) -> usize {
        self.reads.iter().chain(&self.writes).map(VecDeque::len).sum::<usize>() + self.special.len()
    }
}
