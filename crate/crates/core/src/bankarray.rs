//! Physical bank contents, the single-port check, and the mapping from
//! logical data rows to physical parity rows.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::codes::{CodeLayout, ParitySegment, Word};
use crate::controller::{AccessPattern, OpKind};
use crate::{Error, Result};

/// Which data rows currently have parity, and where in each segment they live.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RowMap {
    /// Rows `[0, coded_rows)` map to segment offset `row`.
    Static { coded_rows: usize },
    /// Rows are grouped into regions of `region_rows`; an active region
    /// occupies one slot of `region_rows` rows in every segment.
    Regions {
        region_rows: usize,
        slots: Vec<Option<usize>>,
        /// Region whose parity is being retired: still readable, but no
        /// new writes may be redirected into it.
        draining: Option<usize>,
    },
}

impl RowMap {
    pub fn for_layout(layout: &CodeLayout) -> Self {
        RowMap::Static {
            coded_rows: layout.coded_rows(),
        }
    }

    pub fn regions(region_rows: usize, region_count: usize) -> Self {
        RowMap::Regions {
            region_rows,
            slots: vec![None; region_count],
            draining: None,
        }
    }

    /// Offset of `row` inside a parity segment, or `None` when the row is not coded.
    pub fn offset(&self, row: usize) -> Option<usize> {
        match self {
            RowMap::Static { coded_rows } => (row < *coded_rows).then_some(row),
            RowMap::Regions {
                region_rows, slots, ..
            } => {
                let slot = (*slots.get(row / region_rows)?)?;
                Some(slot * region_rows + row % region_rows)
            }
        }
    }

    pub fn is_coded(&self, row: usize) -> bool {
        self.offset(row).is_some()
    }

    /// Whether a write to `row` may be redirected into a parity bank.
    pub fn accepts_parity_writes(&self, row: usize) -> bool {
        match self {
            RowMap::Static { .. } => self.is_coded(row),
            RowMap::Regions {
                region_rows,
                draining,
                ..
            } => self.is_coded(row) && *draining != Some(row / region_rows),
        }
    }

    pub fn physical_row(&self, seg: &ParitySegment, row: usize) -> Option<usize> {
        self.offset(row).map(|o| seg.row_offset + o)
    }
}

/// One read result from an applied pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadResult {
    pub bank: usize,
    pub row: usize,
    pub data: Vec<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BankState {
    words: usize,
    depths: Vec<usize>,
    banks: Vec<Vec<Word>>,
    busy: Vec<bool>,
}

impl BankState {
    pub fn new(layout: &CodeLayout) -> Self {
        let words = layout.words();
        let depths = layout.physical_depths();
        let banks = depths.iter().map(|&d| vec![0; d * words]).collect();
        BankState {
            words,
            busy: vec![false; depths.len()],
            depths,
            banks,
        }
    }

    pub fn num_banks(&self) -> usize {
        self.depths.len()
    }

    pub fn depth(&self, bank: usize) -> usize {
        self.depths[bank]
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn row(&self, bank: usize, row: usize) -> &[Word] {
        let w = self.words;
        &self.banks[bank][row * w..(row + 1) * w]
    }

    fn row_mut(&mut self, bank: usize, row: usize) -> &mut [Word] {
        let w = self.words;
        &mut self.banks[bank][row * w..(row + 1) * w]
    }

    fn check(&self, bank: usize, row: usize) -> Result<()> {
        if bank >= self.depths.len() || row >= self.depths[bank] {
            return Err(Error::InvalidArgument(format!("bank {bank} row {row} out of range")));
        }
        Ok(())
    }

    /// Executes one memory cycle. Every bank may appear at most once.
    pub fn apply_pattern(&mut self, pattern: &AccessPattern) -> Result<Vec<ReadResult>> {
        for op in &pattern.ops {
            self.check(op.bank, op.row)?;
            if core::mem::replace(&mut self.busy[op.bank], true) {
                self.busy.iter_mut().for_each(|b| *b = false);
                return Err(Error::PortConflict {
                    bank: op.bank,
                    cycle: pattern.cycle,
                });
            }
        }
        let mut out = Vec::new();
        for op in &pattern.ops {
            match op.kind {
                OpKind::Read => out.push(ReadResult {
                    bank: op.bank,
                    row: op.row,
                    data: self.row(op.bank, op.row).to_vec(),
                }),
                OpKind::Write => {
                    let data = op.data.as_deref().unwrap_or(&[]);
                    if data.len() != self.words {
                        self.busy.iter_mut().for_each(|b| *b = false);
                        return Err(Error::Shape {
                            expected: self.words,
                            actual: data.len(),
                        });
                    }
                    self.row_mut(op.bank, op.row).copy_from_slice(data);
                }
                OpKind::Refresh => {}
            }
        }
        self.busy.iter_mut().for_each(|b| *b = false);
        Ok(out)
    }

    /// Loads data banks from a bank-major image (`bank, row, word`) and
    /// encodes every parity row that `rowmap` marks as coded.
    pub fn initialize_from_oracle(&mut self, layout: &CodeLayout, rowmap: &RowMap, image: &[Word]) -> Result<()> {
        let (n, rows, w) = (layout.num_data_banks(), layout.rows(), layout.words());
        if image.len() != n * rows * w {
            return Err(Error::Shape {
                expected: n * rows * w,
                actual: image.len(),
            });
        }
        for b in 0..n {
            self.banks[b].copy_from_slice(&image[b * rows * w..(b + 1) * rows * w]);
        }
        for bank in &mut self.banks[n..] {
            bank.iter_mut().for_each(|x| *x = 0);
        }
        for p in layout.parity_banks() {
            for seg in &p.segments {
                for row in 0..rows {
                    let Some(prow) = rowmap.physical_row(seg, row) else {
                        continue;
                    };
                    let mut acc = vec![0; w];
                    for s in seg.sources.iter() {
                        for (a, x) in acc.iter_mut().zip(self.row(s, row)) {
                            *a ^= *x;
                        }
                    }
                    self.row_mut(n + p.id, prow).copy_from_slice(&acc);
                }
            }
        }
        Ok(())
    }

    /// Writes rows directly, outside the cycle model. Used for encoding in tests
    /// and by the initial load.
    pub fn poke(&mut self, bank: usize, row: usize, data: &[Word]) -> Result<()> {
        self.check(bank, row)?;
        if data.len() != self.words {
            return Err(Error::Shape {
                expected: self.words,
                actual: data.len(),
            });
        }
        self.row_mut(bank, row).copy_from_slice(data);
        Ok(())
    }

    /// `<bank> <row> <hex words...>` for every row of every bank.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (b, &d) in self.depths.iter().enumerate() {
            for r in 0..d {
                let _ = write!(out, "{b} {r}");
                for x in self.row(b, r) {
                    let _ = write!(out, " {x:016x}");
                }
                out.push('\n');
            }
        }
        out
    }
}
