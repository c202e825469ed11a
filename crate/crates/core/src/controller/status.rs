use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::codes::{ParityLoc, RowStatus, StatusView};
use crate::{Error, Result};

/// The raw two-bit state, without the holder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StatusKind {
    AllFresh,
    DataFresh,
    ParityFresh,
}

/// Per (data bank, row) freshness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeStatusTable {
    rows: usize,
    entries: Vec<RowStatus>,
}

impl CodeStatusTable {
    pub fn new(banks: usize, rows: usize) -> Self {
        CodeStatusTable {
            rows,
            entries: vec![RowStatus::AllFresh; banks * rows],
        }
    }

    pub fn get(&self, bank: usize, row: usize) -> RowStatus {
        self.entries[bank * self.rows + row]
    }

    pub fn set(&mut self, bank: usize, row: usize, status: RowStatus) {
        self.entries[bank * self.rows + row] = status;
    }

    /// Sets a status from its kind and optional holder.
    pub fn set_kind(&mut self, bank: usize, row: usize, kind: StatusKind, holder: Option<ParityLoc>) -> Result<()> {
        let status = match (kind, holder) {
            (StatusKind::AllFresh, _) => RowStatus::AllFresh,
            (StatusKind::DataFresh, _) => RowStatus::DataFresh,
            (StatusKind::ParityFresh, Some(h)) => RowStatus::ParityFresh(h),
            (StatusKind::ParityFresh, None) => {
                return Err(Error::InvalidArgument(format!(
                    "parity-fresh status for bank {bank} row {row} needs a holder"
                )))
            }
        };
        self.set(bank, row, status);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_all_fresh(&self) -> bool {
        self.entries.iter().all(|s| *s == RowStatus::AllFresh)
    }

    /// Whether any bank has a parity-held value in rows `[start, end)`.
    pub fn any_parity_fresh(&self, start: usize, end: usize) -> bool {
        self.entries
            .chunks(self.rows)
            .any(|bank| bank[start..end].iter().any(|s| matches!(s, RowStatus::ParityFresh(_))))
    }

    pub fn reset_rows(&mut self, start: usize, end: usize) {
        for bank in self.entries.chunks_mut(self.rows) {
            bank[start..end].iter_mut().for_each(|s| *s = RowStatus::AllFresh);
        }
    }
}

impl StatusView for CodeStatusTable {
    fn status(&self, bank: usize, row: usize) -> RowStatus {
        self.get(bank, row)
    }
}
