//! Trace records, the address-to-bank mapping, and conversion of a trace
//! into per-core request streams.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use crate::codes::{Address, Word};
use crate::controller::{AccessKind, AccessRequest};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub time_ns: u64,
    pub core: usize,
    pub kind: AccessKind,
    pub addr: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub core_count: usize,
}

impl Trace {
    /// Validates per-core time order; `core_count` is one past the highest core id.
    pub fn new(records: Vec<TraceRecord>) -> Result<Self> {
        let core_count = records.iter().map(|r| r.core + 1).max().unwrap_or(0);
        let mut last = alloc::vec![0u64; core_count];
        for (i, r) in records.iter().enumerate() {
            if r.time_ns < last[r.core] {
                return Err(Error::InvalidArgument(format!(
                    "record {i}: core {} goes back in time ({} < {})",
                    r.core, r.time_ns, last[r.core]
                )));
            }
            last[r.core] = r.time_ns;
        }
        Ok(Trace { records, core_count })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Row-interleaved mapping: consecutive rows of `words * 8` bytes go to
/// consecutive banks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AddressMap {
    pub banks: usize,
    pub rows: usize,
    pub words: usize,
}

impl AddressMap {
    pub fn row_bytes(&self) -> u64 {
        self.words as u64 * 8
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.banks as u64 * self.rows as u64 * self.row_bytes()
    }

    pub fn map(&self, addr: u64) -> Result<Address> {
        if addr >= self.capacity_bytes() {
            return Err(Error::config(
                "trace",
                format!("address {addr:#x} is outside the {:#x}-byte memory", self.capacity_bytes()),
            ));
        }
        let line = addr / self.row_bytes();
        Ok(Address {
            bank: (line % self.banks as u64) as usize,
            row: (line / self.banks as u64) as usize,
            col: ((addr % self.row_bytes()) / 8) as usize,
        })
    }

    pub fn unmap(&self, a: Address) -> u64 {
        (a.row as u64 * self.banks as u64 + a.bank as u64) * self.row_bytes() + a.col as u64 * 8
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Pseudo-random initial memory image, bank-major.
pub fn seeded_image(seed: u64, banks: usize, rows: usize, words: usize) -> Vec<Word> {
    let mut s = splitmix64(seed ^ 0x5eed);
    (0..banks * rows * words)
        .map(|_| {
            s = s.wrapping_add(1);
            splitmix64(s)
        })
        .collect()
}

/// Deterministic row value for a write.
pub fn write_payload(addr: u64, time: u64, seq: u64, words: usize) -> Vec<Word> {
    let h = splitmix64(addr ^ splitmix64(time ^ splitmix64(seq)));
    (0..words as u64).map(|w| splitmix64(h ^ w)).collect()
}

/// Read or write transaction: up to `burst` words from one core at one
/// instant on consecutive word addresses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub core: usize,
    pub kind: AccessKind,
    pub issue_time: u64,
    pub words: usize,
}

pub struct Requests {
    pub per_core: Vec<VecDeque<AccessRequest>>,
    pub transactions: Vec<Transaction>,
    pub total: usize,
}

/// Maps every record, groups bursts into transactions and synthesises
/// write payloads. Request ids follow trace order.
pub fn build_requests(trace: &Trace, map: &AddressMap, burst: usize) -> Result<Requests> {
    if burst == 0 {
        return Err(Error::config("burst", "must be at least 1"));
    }
    let mut per_core: Vec<VecDeque<AccessRequest>> = (0..trace.core_count).map(|_| VecDeque::new()).collect();
    let mut transactions: Vec<Transaction> = Vec::new();
    let mut last: Vec<Option<(u64, TraceRecord)>> = alloc::vec![None; trace.core_count];
    for (i, r) in trace.records.iter().enumerate() {
        let addr = map.map(r.addr)?;
        let joins = match last[r.core] {
            Some((txn, prev)) => {
                prev.kind == r.kind
                    && prev.time_ns == r.time_ns
                    && r.addr == prev.addr + 8
                    && transactions[txn as usize].words < burst
            }
            None => false,
        };
        let txn = if joins {
            let t = last[r.core].expect("joined").0;
            transactions[t as usize].words += 1;
            t
        } else {
            transactions.push(Transaction {
                core: r.core,
                kind: r.kind,
                issue_time: r.time_ns,
                words: 1,
            });
            transactions.len() as u64 - 1
        };
        last[r.core] = Some((txn, *r));
        let id = i as u64;
        let payload = (r.kind == AccessKind::Write).then(|| write_payload(r.addr, r.time_ns, id, map.words));
        per_core[r.core].push_back(AccessRequest {
            id,
            core: r.core,
            kind: r.kind,
            addr,
            issue_time: r.time_ns,
            payload,
            txn_id: txn,
            is_critical: !joins,
        });
    }
    Ok(Requests {
        per_core,
        transactions,
        total: trace.records.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(t: u64, core: usize, kind: AccessKind, addr: u64) -> TraceRecord {
        TraceRecord {
            time_ns: t,
            core,
            kind,
            addr,
        }
    }

    #[test]
    fn interleaved_mapping_round_trips() {
        let m = AddressMap { banks: 8, rows: 1024, words: 16 };
        assert_eq!(m.row_bytes(), 128);
        assert_eq!(m.map(0).unwrap(), Address::new(0, 0, 0));
        assert_eq!(m.map(128).unwrap(), Address::new(1, 0, 0));
        assert_eq!(m.map(8 * 128 + 24).unwrap(), Address::new(0, 1, 3));
        for a in [0u64, 8, 1000, 123_456, m.capacity_bytes() - 8] {
            assert_eq!(m.unmap(m.map(a).unwrap()), a);
        }
        assert!(matches!(m.map(m.capacity_bytes()), Err(Error::InvalidConfig { field: "trace", .. })));
    }

    #[test]
    fn time_regression_is_rejected() {
        let r = Trace::new(vec![rec(5, 0, AccessKind::Read, 0), rec(4, 0, AccessKind::Read, 0)]);
        assert!(r.is_err());
        let ok = Trace::new(vec![rec(5, 0, AccessKind::Read, 0), rec(4, 1, AccessKind::Read, 0)]).unwrap();
        assert_eq!(ok.core_count, 2);
    }

    #[test]
    fn bursts_group_into_transactions() {
        let t = Trace::new(vec![
            rec(0, 0, AccessKind::Read, 64),
            rec(0, 0, AccessKind::Read, 72),
            rec(0, 0, AccessKind::Read, 80),
            rec(0, 0, AccessKind::Read, 88),
            rec(0, 0, AccessKind::Read, 96),
            rec(0, 1, AccessKind::Write, 0),
            rec(1, 1, AccessKind::Write, 8),
        ])
        .unwrap();
        let m = AddressMap { banks: 8, rows: 64, words: 16 };
        let r = build_requests(&t, &m, 4).unwrap();
        assert_eq!(r.transactions.len(), 4);
        assert_eq!(r.transactions[0].words, 4);
        let crit: Vec<bool> = r.per_core[0].iter().map(|q| q.is_critical).collect();
        assert_eq!(crit, [true, false, false, false, true]);
        assert!(r.per_core[1].iter().all(|q| q.payload.as_ref().is_some_and(|p| p.len() == 16)));
        assert_ne!(r.per_core[1][0].payload, r.per_core[1][1].payload);
    }

    #[test]
    fn image_is_seeded() {
        assert_eq!(seeded_image(1, 2, 3, 4), seeded_image(1, 2, 3, 4));
        assert_ne!(seeded_image(1, 2, 3, 4), seeded_image(2, 2, 3, 4));
    }
}
