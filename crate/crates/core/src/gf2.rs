//! Incremental GF(2) span over data-bank bitmasks.
//!
//! Each inserted vector carries a bit identifying the symbol (physical read)
//! it came from, so a successful membership test also yields the set of reads
//! whose XOR produces the target.

#[derive(Clone)]
pub(crate) struct Span {
    // basis[b] has its highest set bit at b
    basis: [(u32, u64); 32],
    present: u32,
}

impl Span {
    pub(crate) fn new() -> Self {
        Span {
            basis: [(0, 0); 32],
            present: 0,
        }
    }

    fn reduce(&self, mut v: u32, mut combo: u64) -> (u32, u64) {
        while v != 0 {
            let top = 31 - v.leading_zeros();
            if self.present & (1 << top) == 0 {
                break;
            }
            let (bv, bc) = self.basis[top as usize];
            v ^= bv;
            combo ^= bc;
        }
        (v, combo)
    }

    /// Returns true when the vector increased the rank.
    pub(crate) fn insert(&mut self, v: u32, symbol: usize) -> bool {
        let (r, c) = self.reduce(v, 1u64 << symbol);
        if r == 0 {
            return false;
        }
        let top = 31 - r.leading_zeros();
        self.basis[top as usize] = (r, c);
        self.present |= 1 << top;
        true
    }

    /// Symbols whose XOR equals `target`, if it lies in the span.
    pub(crate) fn represent(&self, target: u32) -> Option<u64> {
        let (r, c) = self.reduce(target, 0);
        (r == 0).then_some(c)
    }

    pub(crate) fn contains(&self, target: u32) -> bool {
        self.reduce(target, 0).0 == 0
    }
}
