//! Smallest optimistically lock-closed set for a candidate pair.
//!
//! Starting from the closures of both events' predecessors, the set keeps
//! absorbing the closure of every open acquire's release, unless that
//! release's closure would pull in one of the two candidate events. The
//! result only ever grows along thread order, so it is stored as a
//! [`Frontier`] and can seed the computation for a later partner of the same
//! thread.

use crate::index::{Pos, TraceIndex};
use crate::trace::{EventId, LockId, ThreadId};

/// A thread-order downward-closed event set: events `1..=cut[t]` of every
/// thread `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frontier {
    cut: Vec<Pos>,
}

impl Frontier {
    pub fn empty(nthreads: usize) -> Self {
        Frontier { cut: vec![0; nthreads] }
    }

    pub fn from_cut(cut: Vec<Pos>) -> Self {
        Frontier { cut }
    }

    pub fn cut(&self) -> &[Pos] {
        &self.cut
    }

    #[inline]
    pub fn cut_of(&self, t: ThreadId) -> Pos {
        self.cut[t.index()]
    }

    #[inline]
    pub fn contains(&self, idx: &TraceIndex, e: EventId) -> bool {
        idx.pos(e) <= self.cut[idx.thread_of(e).index()]
    }

    pub fn len(&self) -> usize {
        self.cut.iter().map(|&c| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cut.iter().all(|&c| c == 0)
    }

    /// Pointwise comparison of cuts.
    pub fn is_subset_of(&self, other: &Frontier) -> bool {
        self.cut.iter().zip(&other.cut).all(|(a, b)| a <= b)
    }

    /// Member events in trace order.
    pub fn events(&self, idx: &TraceIndex) -> Vec<EventId> {
        let mut out: Vec<EventId> = self
            .cut
            .iter()
            .enumerate()
            .flat_map(|(t, &c)| idx.thread_events(ThreadId(t as u32))[..c as usize].iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    /// Included acquires whose matching release is not included, in trace order.
    pub fn open_acquires(&self, idx: &TraceIndex) -> Vec<EventId> {
        let mut out: Vec<EventId> = self
            .cut
            .iter()
            .enumerate()
            .flat_map(|(t, &c)| idx.held_at(ThreadId(t as u32), c).iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    pub fn open_acquires_of(&self, idx: &TraceIndex, lock: LockId) -> Vec<EventId> {
        self.open_acquires(idx)
            .into_iter()
            .filter(|&a| idx.event(a).op.lock() == Some(lock))
            .collect()
    }

    /// Raises the cut to include `TLC({e})`. Returns how many events were added.
    pub fn absorb(&mut self, idx: &TraceIndex, e: EventId) -> usize {
        let mut added = 0;
        for (c, &k) in self.cut.iter_mut().zip(idx.clock(e)) {
            if k > *c {
                added += (k - *c) as usize;
                *c = k;
            }
        }
        added
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClosureStats {
    /// Events newly included on top of the seed.
    pub added: usize,
    /// Releases whose closure was absorbed by the fixpoint.
    pub releases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureResult {
    pub frontier: Frontier,
    /// One of the two events was forced into the set; the pair cannot race.
    pub absorbed: bool,
    pub stats: ClosureStats,
}

/// Computes the optimistic lock closure of `(e1, e2)` on top of `seed`.
///
/// `seed` must be empty or the frontier previously returned for `(e1, e2')`
/// with `e2'` thread-ordered before `e2`; the result is then the same as
/// starting from scratch.
pub fn closure(idx: &TraceIndex, e1: EventId, e2: EventId, seed: &Frontier) -> ClosureResult {
    let mut frontier = seed.clone();
    let mut stats = ClosureStats::default();
    if idx.thread_of(e1) == idx.thread_of(e2) {
        return ClosureResult { frontier, absorbed: true, stats };
    }
    for p in [idx.prev(e1), idx.prev(e2)].into_iter().flatten() {
        stats.added += frontier.absorb(idx, p);
    }
    if frontier.contains(idx, e1) || frontier.contains(idx, e2) {
        return ClosureResult { frontier, absorbed: true, stats };
    }

    let mut worklist = frontier.open_acquires(idx);
    while let Some(a) = worklist.pop() {
        let Some(rel) = idx.matching(a) else { continue };
        if frontier.contains(idx, rel) || idx.tlc_contains(rel, e1) || idx.tlc_contains(rel, e2) {
            continue;
        }
        stats.releases += 1;
        let clock = idx.clock(rel);
        for (t, c) in frontier.cut.iter_mut().enumerate() {
            let k = clock[t];
            if k > *c {
                stats.added += (k - *c) as usize;
                *c = k;
                worklist.extend_from_slice(idx.held_at(ThreadId(t as u32), k));
            }
        }
    }
    ClosureResult { frontier, absorbed: false, stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::trace::Trace;

    fn idx(t: Trace) -> TraceIndex {
        TraceIndex::new(t).unwrap()
    }

    #[test]
    fn critical_section_reversal_closure() {
        let idx = idx(fixtures::critical_section_reversal());
        let r = closure(&idx, 0, 11, &Frontier::empty(idx.num_threads()));
        assert!(!r.absorbed);
        assert_eq!(r.frontier.events(&idx), vec![2, 3, 6, 7, 8, 9, 10]);
        assert!(r.frontier.contains(&idx, 8));
        assert!(!r.frontier.contains(&idx, 5));
        assert_eq!(r.frontier.open_acquires(&idx), vec![2]);
    }

    #[test]
    fn reordered_prefix_closure() {
        let idx = idx(fixtures::reordered_prefix());
        let r = closure(&idx, 0, 4, &Frontier::empty(idx.num_threads()));
        assert!(!r.absorbed);
        assert_eq!(r.frontier.events(&idx), vec![3]);
        assert!(idx.tlc_contains(5, 4));
    }

    #[test]
    fn cyclic_reordering_closure() {
        let idx = idx(fixtures::cyclic_reordering());
        let r = closure(&idx, 3, 8, &Frontier::empty(idx.num_threads()));
        assert!(!r.absorbed);
        assert_eq!(r.frontier.events(&idx), vec![0, 1, 2, 5, 6, 7]);
    }

    #[test]
    fn empty_frontier_contains_nothing() {
        let idx = idx(fixtures::critical_section_reversal());
        let f = Frontier::empty(idx.num_threads());
        assert!((0..idx.len()).all(|e| !f.contains(&idx, e)));
        assert!(f.is_empty());
    }

    #[test]
    fn same_thread_and_causal_pairs_are_absorbed() {
        let idx = idx(fixtures::critical_section_reversal());
        let empty = Frontier::empty(idx.num_threads());
        assert!(closure(&idx, 0, 1, &empty).absorbed);
        // b's write sits after a read of a's second write.
        let causal = idx_of("a|w(x)\na|w(y)\nb|r(y)\nb|w(x)");
        assert!(closure(&causal, 0, 3, &Frontier::empty(2)).absorbed);
    }

    #[test]
    fn reads_from_partner_is_not_absorbed() {
        // A read racing with the write it reads from.
        let idx = idx_of("T1|w(x)|3\nT2|r(x)|7");
        let r = closure(&idx, 0, 1, &Frontier::empty(2));
        assert!(!r.absorbed);
        assert!(r.frontier.is_empty());
    }

    fn idx_of(text: &str) -> TraceIndex {
        TraceIndex::new(Trace::parse(text).unwrap()).unwrap()
    }
}
