//! Read pattern builder.
//!
//! Requests are taken oldest first, one bank-queue frontier at a time. All
//! frontiers of the same code group that sit on the same row are solved
//! together: the builder picks the cheapest set of still-free physical reads
//! whose GF(2) span contains every servable target, which lets a parity read
//! chain through an earlier degraded result (`c = a + (a+b) + (b+c)`).

use alloc::vec;
use alloc::vec::Vec;

use super::{BankOp, BankQueues, DecodeRecipe, Purpose};
use crate::bankarray::RowMap;
use crate::codes::{CodeLayout, ParityLoc, PhysicalRead, ReadPlan, RowStatus, StatusView};
use crate::gf2::Span;

/// Reads already booked for one (group, row) this cycle.
#[derive(Clone, Copy, Debug)]
struct Sym {
    vec: u32,
    bank: usize,
    row: usize,
}

struct ParityOption {
    bank: usize,
    /// (symbol vector, physical row) for every usable segment.
    choices: Vec<(u32, usize)>,
}

struct Solution {
    chosen: Vec<Sym>,
}

/// Output of the read builder: bank operations, one recipe per served
/// request, and how many requests were served from the front of each queue.
pub struct ReadSelection {
    pub ops: Vec<BankOp>,
    pub recipes: Vec<DecodeRecipe>,
    pub served: Vec<usize>,
}

/// Builds a read pattern over `queues`. Banks already marked in `used` are untouchable.
pub fn build_read_pattern(
    layout: &CodeLayout,
    rowmap: &RowMap,
    status: &dyn StatusView,
    queues: &BankQueues,
    used: &mut [bool],
) -> ReadSelection {
    let n = layout.num_data_banks();
    let mut served = vec![0usize; n];
    let mut blocked = vec![false; n];
    let mut booked: Vec<((usize, usize), Vec<Sym>)> = Vec::new();
    let mut ops = Vec::new();
    let mut recipes = Vec::new();

    let frontier = |served: &[usize], blocked: &[bool], b: usize| {
        if blocked[b] {
            None
        } else {
            queues.reads(b).get(served[b])
        }
    };

    loop {
        let Some(cand) = (0..n)
            .filter_map(|b| frontier(&served, &blocked, b).map(|e| (e.seq, b)))
            .min()
            .map(|(_, b)| b)
        else {
            break;
        };
        let row = queues.reads(cand)[served[cand]].req.addr.row;
        let group = layout.group_of(cand);
        let members = layout.groups()[group];

        let targets: Vec<usize> = core::iter::once(cand)
            .chain(members.iter().filter(|&b| {
                b != cand && frontier(&served, &blocked, b).is_some_and(|e| e.req.addr.row == row)
            }))
            .collect();

        let data: Vec<usize> = members
            .iter()
            .filter(|&d| {
                !used[d]
                    && !matches!(status.status(d, row), RowStatus::ParityFresh(_))
                    && frontier(&served, &blocked, d).is_none_or(|e| e.req.addr.row == row)
            })
            .collect();

        let mut parity = Vec::new();
        if let Some(offset) = rowmap.offset(row) {
            for p in layout.parity_banks() {
                let bank = n + p.id;
                if used[bank] || layout.parity_group(bank) != group {
                    continue;
                }
                let mut choices = Vec::new();
                for (k, seg) in p.segments.iter().enumerate() {
                    let loc = ParityLoc { bank, segment: k };
                    let prow = seg.row_offset + offset;
                    let holder = seg
                        .sources
                        .iter()
                        .find(|&s| status.status(s, row) == RowStatus::ParityFresh(loc));
                    if let Some(s) = holder {
                        choices.push((1u32 << s, prow));
                    } else if crate::codes::parity_is_consistent(seg, row, status) {
                        choices.push((seg.sources.0, prow));
                    }
                }
                if !choices.is_empty() {
                    parity.push(ParityOption { bank, choices });
                }
            }
        }

        let slot = match booked.iter().position(|(k, _)| *k == (group, row)) {
            Some(i) => i,
            None => {
                booked.push(((group, row), Vec::new()));
                booked.len() - 1
            }
        };
        let existing = &booked[slot].1;
        let demand = |b: usize| queues.reads(b).len() - served[b];
        let Some(sol) = solve(existing, &data, row, &parity, &targets, &demand) else {
            blocked[cand] = true;
            continue;
        };

        for s in &sol.chosen {
            used[s.bank] = true;
            ops.push(BankOp {
                purpose: Purpose::Serve,
                ..BankOp::read(s.bank, s.row)
            });
        }
        let syms = &mut booked[slot].1;
        syms.extend(sol.chosen.iter().copied());
        let mut span = Span::new();
        for (i, s) in syms.iter().enumerate() {
            span.insert(s.vec, i);
        }
        for &t in &targets {
            let Some(combo) = span.represent(1 << t) else {
                continue;
            };
            let reads: Vec<PhysicalRead> = (0..syms.len())
                .filter(|i| combo & (1 << i) != 0)
                .map(|i| PhysicalRead {
                    bank: syms[i].bank,
                    row: syms[i].row,
                })
                .collect();
            let q = queues.reads(t);
            while let Some(e) = q.get(served[t]) {
                if e.req.addr.row != row {
                    break;
                }
                recipes.push(DecodeRecipe {
                    request: e.req.id,
                    plan: ReadPlan {
                        target: e.req.addr,
                        reads: reads.clone(),
                    },
                });
                served[t] += 1;
            }
        }
    }
    ReadSelection { ops, recipes, served }
}

/// Lexicographic objective: candidate served, then number served, then
/// fewest new reads, fewest data-bank reads, least queued demand on the
/// chosen data banks, then enumeration order.
fn solve(
    existing: &[Sym],
    data: &[usize],
    row: usize,
    parity: &[ParityOption],
    targets: &[usize],
    demand: &dyn Fn(usize) -> usize,
) -> Option<Solution> {
    let cand = targets[0];
    let score = |s: &Span| -> usize {
        targets
            .iter()
            .map(|&t| if s.contains(1 << t) { if t == cand { 1 << 16 } else { 1 } } else { 0 })
            .sum()
    };
    let mut base = Span::new();
    for (i, s) in existing.iter().enumerate() {
        base.insert(s.vec, i);
    }
    let mut all = base.clone();
    for &d in data {
        all.insert(1 << d, 0);
    }
    for p in parity {
        for &(v, _) in &p.choices {
            all.insert(v, 0);
        }
    }
    let ub = score(&all);
    if ub < 1 << 16 {
        return None;
    }
    if score(&base) == ub {
        return Some(Solution { chosen: Vec::new() });
    }

    // (score, data count, demand, chosen)
    let mut best: Option<(usize, usize, usize, Vec<Sym>)> = None;
    let max_t = data.len() + parity.len();
    for t in 1..=max_t {
        for kd in 0..=t.min(data.len()) {
            let kp = t - kd;
            if kp > parity.len() {
                continue;
            }
            for_each_subset(data.len(), kd, &mut |di| {
                let dem: usize = di.iter().map(|&i| demand(data[i])).sum();
                let mut s1 = base.clone();
                for (j, &i) in di.iter().enumerate() {
                    s1.insert(1 << data[i], existing.len() + j);
                }
                for_each_subset(parity.len(), kp, &mut |pi| {
                    let mut pick = vec![0usize; pi.len()];
                    loop {
                        let mut s2 = s1.clone();
                        for (j, (&p, &c)) in pi.iter().zip(&pick).enumerate() {
                            s2.insert(parity[p].choices[c].0, existing.len() + kd + j);
                        }
                        let sc = score(&s2);
                        let better = match &best {
                            None => true,
                            Some((bs, bk, bd, bc)) => {
                                sc > *bs || (sc == *bs && bc.len() == t && *bk == kd && dem < *bd)
                            }
                        };
                        if better {
                            let mut chosen: Vec<Sym> = di
                                .iter()
                                .map(|&i| Sym {
                                    vec: 1 << data[i],
                                    bank: data[i],
                                    row,
                                })
                                .collect();
                            chosen.extend(pi.iter().zip(&pick).map(|(&p, &c)| Sym {
                                vec: parity[p].choices[c].0,
                                bank: parity[p].bank,
                                row: parity[p].choices[c].1,
                            }));
                            best = Some((sc, kd, dem, chosen));
                        }
                        // next segment choice
                        let mut i = 0;
                        while i < pick.len() {
                            pick[i] += 1;
                            if pick[i] < parity[pi[i]].choices.len() {
                                break;
                            }
                            pick[i] = 0;
                            i += 1;
                        }
                        if i == pick.len() {
                            break;
                        }
                    }
                });
            });
            if best.as_ref().is_some_and(|b| b.0 == ub) {
                return best.map(|(_, _, _, chosen)| Solution { chosen });
            }
        }
    }
    best.filter(|b| b.0 >= 1 << 16).map(|(_, _, _, chosen)| Solution { chosen })
}

/// Calls `f` with every `k`-subset of `0..m` in lexicographic order.
fn for_each_subset(m: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < m - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_in_lexicographic_order() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, &mut |s| seen.push(s.to_vec()));
        assert_eq!(seen, [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]);
        let mut n = 0;
        for_each_subset(3, 0, &mut |s| {
            assert!(s.is_empty());
            n += 1
        });
        assert_eq!(n, 1);
        for_each_subset(2, 3, &mut |_| panic!());
    }
}
