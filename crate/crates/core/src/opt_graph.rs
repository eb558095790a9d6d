//! Explicit reordering graph over a closed event set, witness extraction and
//! an independent checker for witness reorderings.
//!
//! Edges order everything an optimistic reordering must keep: generalized
//! thread order, conflicting accesses, fully matched critical sections on the
//! same lock, and every release of a lock before that lock's open acquire.
//! "Consecutive" for conflict and critical-section edges is taken relative to
//! the node set, so the transitive closure is exactly the required order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use crate::closure::Frontier;
use crate::index::TraceIndex;
use crate::trace::{EventId, Op};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    ThreadOrder,
    Conflict,
    Match,
    Unmatch,
}

#[derive(Debug, Clone, Default)]
pub struct OptGraph {
    /// Member events in trace order.
    pub nodes: Vec<EventId>,
    pub edges: Vec<(EventId, EventId, EdgeKind)>,
}

impl OptGraph {
    pub fn build(idx: &TraceIndex, f: &Frontier) -> Self {
        let nodes = f.events(idx);
        let mut edges = Vec::with_capacity(nodes.len() * 2);
        let trace = idx.trace();

        for &e in &nodes {
            if let Some(p) = idx.prev(e) {
                edges.push((p, e, EdgeKind::ThreadOrder));
            }
            if let Some(c) = idx.join_input(e) {
                edges.push((c, e, EdgeKind::ThreadOrder));
            }
        }

        for x in 0..trace.num_vars() {
            let mut last_write: Option<EventId> = None;
            let mut epoch_reads: Vec<EventId> = Vec::new();
            for &a in idx.var_accesses(crate::trace::VarId(x as u32)) {
                if !f.contains(idx, a) {
                    continue;
                }
                if idx.event(a).op.is_write() {
                    if let Some(w) = last_write {
                        edges.push((w, a, EdgeKind::Conflict));
                    }
                    for r in epoch_reads.drain(..) {
                        edges.push((r, a, EdgeKind::Conflict));
                    }
                    last_write = Some(a);
                } else {
                    if let Some(w) = last_write {
                        edges.push((w, a, EdgeKind::Conflict));
                    }
                    epoch_reads.push(a);
                }
            }
        }

        for l in 0..trace.num_locks() {
            let mut last_rel: Option<EventId> = None;
            let mut open = Vec::new();
            for &a in idx.lock_acquires(crate::trace::LockId(l as u32)) {
                if !f.contains(idx, a) {
                    continue;
                }
                match idx.matching(a).filter(|&r| f.contains(idx, r)) {
                    Some(r) => {
                        if let Some(prev_rel) = last_rel {
                            edges.push((prev_rel, a, EdgeKind::Match));
                        }
                        last_rel = Some(r);
                    }
                    None => open.push(a),
                }
            }
            if let Some(r) = last_rel {
                for a in open {
                    edges.push((r, a, EdgeKind::Unmatch));
                }
            }
        }

        OptGraph { nodes, edges }
    }

    fn local(&self, e: EventId) -> usize {
        self.nodes.binary_search(&e).expect("edge endpoint is a node")
    }

    /// Topological order breaking ties by smallest trace index, or `None`
    /// if the graph has a cycle.
    pub fn linearize(&self) -> Option<Vec<EventId>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(u, v, _) in &self.edges {
            let (u, v) = (self.local(u), self.local(v));
            succ[u].push(v);
            indeg[v] += 1;
        }
        let mut ready: BinaryHeap<Reverse<usize>> =
            (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(i)) = ready.pop() {
            order.push(self.nodes[i]);
            for &j in &succ[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.push(Reverse(j));
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.linearize().is_some()
    }
}

/// A reordering that exposes the race between `focal.0` and `focal.1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub order: Vec<EventId>,
    pub focal: (EventId, EventId),
}

impl Witness {
    /// Trace-format text with a header naming the pair (1-based).
    pub fn to_text(&self, idx: &TraceIndex) -> String {
        let mut out = format!("# witness for ({},{})\n", self.focal.0 + 1, self.focal.1 + 1);
        for &e in &self.order {
            out.push_str(&idx.trace().format_event(e));
            out.push('\n');
        }
        out
    }
}

/// Builds the graph over `f` and, if acyclic, returns its canonical linearization.
pub fn witness_for(idx: &TraceIndex, f: &Frontier, e1: EventId, e2: EventId) -> Option<Witness> {
    OptGraph::build(idx, f)
        .linearize()
        .map(|order| Witness { order, focal: (e1, e2) })
}

/// First clause a candidate witness violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WitnessViolation {
    UnknownEvent(EventId),
    Duplicate(EventId),
    /// `event` is present but its closure input `missing` is not.
    NotClosed { event: EventId, missing: EventId },
    ThreadOrder { before: EventId, after: EventId },
    ReadsFrom { read: EventId, expected: Option<EventId>, observed: Option<EventId> },
    LockSemantics { event: EventId },
    FocalIncluded(EventId),
    FocalNotEnabled { focal: EventId, missing: EventId },
    /// Open acquire whose release could have been added without a focal event.
    NotLockClosed { acquire: EventId },
    ConflictOrder { first: EventId, second: EventId },
    CriticalSectionOrder { first: EventId, second: EventId },
}

impl fmt::Display for WitnessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use WitnessViolation::*;
        let n = |e: &EventId| e + 1;
        match self {
            UnknownEvent(e) => write!(f, "event {} is not in the trace", n(e)),
            Duplicate(e) => write!(f, "event {} occurs twice", n(e)),
            NotClosed { event, missing } => {
                write!(f, "event {} requires absent event {}", n(event), n(missing))
            }
            ThreadOrder { before, after } => {
                write!(f, "event {} must precede event {}", n(before), n(after))
            }
            ReadsFrom { read, expected, observed } => write!(
                f,
                "read {} observes {:?} instead of {:?}",
                n(read),
                observed.map(|e| e + 1),
                expected.map(|e| e + 1)
            ),
            LockSemantics { event } => write!(f, "event {} breaks lock semantics", n(event)),
            FocalIncluded(e) => write!(f, "racing event {} is part of the reordering", n(e)),
            FocalNotEnabled { focal, missing } => write!(
                f,
                "racing event {} is not enabled: predecessor {} is absent",
                n(focal),
                n(missing)
            ),
            NotLockClosed { acquire } => write!(
                f,
                "acquire {} is left open although its release could be added",
                n(acquire)
            ),
            ConflictOrder { first, second } => write!(
                f,
                "conflicting events {} and {} are reversed",
                n(first),
                n(second)
            ),
            CriticalSectionOrder { first, second } => write!(
                f,
                "critical sections at {} and {} are reversed",
                n(first),
                n(second)
            ),
        }
    }
}

/// Checks that `order` is an optimistic correct reordering over an
/// optimistically lock-closed set in which `e1` and `e2` are both enabled.
pub fn validate_witness(
    idx: &TraceIndex,
    order: &[EventId],
    e1: EventId,
    e2: EventId,
) -> Result<(), WitnessViolation> {
    use WitnessViolation::*;
    let n = idx.len();
    let mut at: Vec<Option<usize>> = vec![None; n];
    for (i, &e) in order.iter().enumerate() {
        if e >= n {
            return Err(UnknownEvent(e));
        }
        if at[e].is_some() {
            return Err(Duplicate(e));
        }
        at[e] = Some(i);
    }
    let inputs = |e: EventId| {
        [idx.prev(e), idx.last_write(e), idx.join_input(e)]
            .into_iter()
            .flatten()
    };

    for &e in order {
        if let Some(missing) = inputs(e).find(|&p| at[p].is_none()) {
            return Err(NotClosed { event: e, missing });
        }
    }
    for &e in order {
        for p in [idx.prev(e), idx.join_input(e)].into_iter().flatten() {
            if at[p] > at[e] {
                return Err(ThreadOrder { before: p, after: e });
            }
        }
    }

    let trace = idx.trace();
    let mut writer: Vec<Option<EventId>> = vec![None; trace.num_vars()];
    let mut holder: Vec<Option<EventId>> = vec![None; trace.num_locks()];
    for &e in order {
        match idx.event(e).op {
            Op::Write(x) => writer[x.index()] = Some(e),
            Op::Read(x) => {
                let observed = writer[x.index()];
                let expected = idx.last_write(e);
                if observed != expected {
                    return Err(ReadsFrom { read: e, expected, observed });
                }
            }
            Op::Acquire(l) => {
                if holder[l.index()].is_some() {
                    return Err(LockSemantics { event: e });
                }
                holder[l.index()] = Some(e);
            }
            Op::Release(l) => {
                if holder[l.index()] != idx.matching(e) || idx.matching(e).is_none() {
                    return Err(LockSemantics { event: e });
                }
                holder[l.index()] = None;
            }
            Op::Fork(_) | Op::Join(_) => {}
        }
    }

    for f in [e1, e2] {
        if at[f].is_some() {
            return Err(FocalIncluded(f));
        }
    }
    for f in [e1, e2] {
        if let Some(p) = idx.prev(f) {
            if at[p].is_none() {
                return Err(FocalNotEnabled { focal: f, missing: p });
            }
        }
    }

    for &a in order {
        if !matches!(idx.event(a).op, Op::Acquire(_)) {
            continue;
        }
        if let Some(r) = idx.matching(a) {
            if at[r].is_none() && !idx.tlc_contains(r, e1) && !idx.tlc_contains(r, e2) {
                return Err(NotLockClosed { acquire: a });
            }
        }
    }

    // Thread order already holds here, so same-thread accesses are in trace
    // order and the running maxima only trip on cross-thread reversals.
    let mut max_access: Vec<Option<EventId>> = vec![None; trace.num_vars()];
    let mut max_write: Vec<Option<EventId>> = vec![None; trace.num_vars()];
    let mut max_matched_acq: Vec<Option<EventId>> = vec![None; trace.num_locks()];
    for &e in order {
        match idx.event(e).op {
            Op::Write(x) => {
                if let Some(m) = max_access[x.index()].filter(|&m| m > e) {
                    return Err(ConflictOrder { first: e, second: m });
                }
                max_access[x.index()] = max_access[x.index()].max(Some(e));
                max_write[x.index()] = max_write[x.index()].max(Some(e));
            }
            Op::Read(x) => {
                if let Some(m) = max_write[x.index()].filter(|&m| m > e) {
                    return Err(ConflictOrder { first: e, second: m });
                }
                max_access[x.index()] = max_access[x.index()].max(Some(e));
            }
            Op::Acquire(l) => {
                let matched = idx.matching(e).is_some_and(|r| at[r].is_some());
                if matched {
                    if let Some(m) = max_matched_acq[l.index()].filter(|&m| m > e) {
                        return Err(CriticalSectionOrder { first: e, second: m });
                    }
                    max_matched_acq[l.index()] = max_matched_acq[l.index()].max(Some(e));
                }
            }
            _ => {}
        }
    }
    Ok(())
}
