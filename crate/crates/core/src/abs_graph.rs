//! Cycle detection on the reordering graph without building it.
//!
//! Every backward edge of the explicit graph runs from the last included
//! release of a lock to an open acquire of that lock, so a cycle exists iff
//! these few events are cyclically connected by forward paths. Forward
//! reachability from an event is computed per target thread from tables of
//! earliest one-step successors, answered by range-minimum queries and
//! clamped to the frontier.

use std::fmt::Write as _;

use crate::closure::Frontier;
use crate::index::{Pos, TraceIndex};
use crate::rmq::SparseMin;
use crate::trace::{EventId, LockId, Op, ThreadId};

/// Earliest one-step successor tables, one per ordered thread pair.
#[derive(Debug, Clone)]
pub struct EisTables {
    nthreads: usize,
    /// Indexed `t1 * nthreads + t2`; entry `p - 1` belongs to position `p` of
    /// `t1`. Missing successors hold `thread_len(t2) + 1`.
    tables: Vec<SparseMin>,
    inf: Vec<Pos>,
}

impl EisTables {
    pub fn new(idx: &TraceIndex) -> Self {
        let nthreads = idx.num_threads();
        let inf: Vec<Pos> = (0..nthreads)
            .map(|t| idx.thread_len(ThreadId(t as u32)) + 1)
            .collect();
        let mut joined_by: Vec<Option<EventId>> = vec![None; nthreads];
        for e in 0..idx.len() {
            if let Op::Join(c) = idx.event(e).op {
                joined_by[c.index()] = Some(e);
            }
        }
        let mut tables = Vec::with_capacity(nthreads * nthreads);
        for t1 in 0..nthreads {
            let events = idx.thread_events(ThreadId(t1 as u32));
            for (t2, &cap) in inf.iter().enumerate() {
                let values = events
                    .iter()
                    .map(|&e| {
                        one_step_successor(idx, &joined_by, e, ThreadId(t2 as u32)).unwrap_or(cap)
                    })
                    .collect();
                tables.push(SparseMin::new(values));
            }
        }
        EisTables { nthreads, tables, inf }
    }

    pub fn num_threads(&self) -> usize {
        self.nthreads
    }

    fn table(&self, t1: ThreadId, t2: ThreadId) -> &SparseMin {
        &self.tables[t1.index() * self.nthreads + t2.index()]
    }

    /// Earliest one-step successor in `t2` of the event at position `p` of `t1`.
    pub fn entry(&self, t1: ThreadId, t2: ThreadId, p: Pos) -> Option<Pos> {
        let v = self.table(t1, t2).get(p as usize - 1);
        (v < self.inf[t2.index()]).then_some(v)
    }

    /// Minimum entry over positions `lo..=hi` of `t1`.
    #[inline]
    pub fn range_min(&self, t1: ThreadId, t2: ThreadId, lo: Pos, hi: Pos) -> Option<Pos> {
        let v = self.table(t1, t2).min(lo as usize - 1, hi as usize - 1);
        (v < self.inf[t2.index()]).then_some(v)
    }
}

fn first_after(list: &[EventId], e: EventId) -> Option<EventId> {
    list.get(list.partition_point(|&f| f <= e)).copied()
}

fn one_step_successor(
    idx: &TraceIndex,
    joined_by: &[Option<EventId>],
    e: EventId,
    t2: ThreadId,
) -> Option<Pos> {
    let t1 = idx.thread_of(e);
    let p = idx.pos(e);
    if t1 == t2 {
        return (p < idx.thread_len(t1)).then_some(p + 1);
    }
    let ev = idx.event(e);
    let mut best: Option<Pos> = None;
    let mut offer = |q: Pos| best = Some(best.map_or(q, |b| b.min(q)));
    if let Some(f) = first_after(idx.conflicting_in_thread(e, t2), e) {
        offer(idx.pos(f));
    }
    match ev.op {
        Op::Release(l) => {
            if let Some(a) = first_after(idx.thread_lock_acquires(l, t2), e) {
                offer(idx.pos(a));
            }
        }
        Op::Fork(c) if c == t2 && idx.thread_len(c) > 0 => offer(1),
        _ => {}
    }
    if p == idx.thread_len(t1) {
        if let Some(j) = joined_by[t1.index()].filter(|&j| idx.thread_of(j) == t2) {
            offer(idx.pos(j));
        }
    }
    best
}

fn trace_index_of(idx: &TraceIndex, t: usize, p: Pos) -> EventId {
    idx.at(ThreadId(t as u32), p)
}

/// Per thread, the earliest position reachable from `e` through forward
/// edges of the reordering graph over `f`. `e` reaches itself.
pub fn earliest_successors(
    eis: &EisTables,
    idx: &TraceIndex,
    f: &Frontier,
    e: EventId,
) -> Vec<Option<Pos>> {
    let n = idx.num_threads();
    let mut succ: Vec<Option<Pos>> = vec![None; n];
    succ[idx.thread_of(e).index()] = Some(idx.pos(e));
    let mut visited = vec![false; n];
    // Forward edges increase the trace index, so settling threads in trace
    // order of their current successor never needs a revisit.
    while let Some(t) = (0..n)
        .filter(|&t| !visited[t])
        .filter_map(|t| succ[t].map(|p| (trace_index_of(idx, t, p), t)))
        .min()
        .map(|(_, t)| t)
    {
        visited[t] = true;
        relax(eis, f, &mut succ, t);
    }
    succ
}

fn relax(eis: &EisTables, f: &Frontier, succ: &mut [Option<Pos>], t: usize) -> bool {
    let Some(p) = succ[t] else { return false };
    let cut = f.cut();
    let mut changed = false;
    for t2 in 0..succ.len() {
        let Some(q) = eis.range_min(ThreadId(t as u32), ThreadId(t2 as u32), p, cut[t]) else {
            continue;
        };
        if q <= cut[t2] && succ[t2].is_none_or(|s| q < s) {
            succ[t2] = Some(q);
            changed = true;
        }
    }
    changed
}

/// [`earliest_successors`] computed by round-robin relaxation until nothing
/// changes.
pub fn earliest_successors_fixpoint(
    eis: &EisTables,
    idx: &TraceIndex,
    f: &Frontier,
    e: EventId,
) -> Vec<Option<Pos>> {
    let n = idx.num_threads();
    let mut succ: Vec<Option<Pos>> = vec![None; n];
    succ[idx.thread_of(e).index()] = Some(idx.pos(e));
    let mut changed = true;
    while changed {
        changed = false;
        for t in (0..n).rev() {
            changed |= relax(eis, f, &mut succ, t);
        }
    }
    succ
}

/// Last included release and open acquires of one lock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LockSummary {
    pub lock: LockId,
    pub last_release: Option<EventId>,
    pub open: Vec<EventId>,
}

/// Locks of `f` that have an open acquire, with their last included release.
pub fn open_locks(idx: &TraceIndex, f: &Frontier) -> Vec<LockSummary> {
    let mut out: Vec<LockSummary> = Vec::new();
    for a in f.open_acquires(idx) {
        let lock = idx.event(a).op.lock().expect("acquire");
        match out.iter_mut().find(|s| s.lock == lock) {
            Some(s) => s.open.push(a),
            None => out.push(LockSummary { lock, last_release: last_release(idx, f, lock), open: vec![a] }),
        }
    }
    out
}

/// Latest release of `lock` in `f`, in trace order.
pub fn last_release(idx: &TraceIndex, f: &Frontier, lock: LockId) -> Option<EventId> {
    (0..idx.num_threads())
        .filter_map(|t| {
            let t = ThreadId(t as u32);
            let rels = idx.thread_lock_releases(lock, t);
            let k = rels.partition_point(|&r| idx.pos(r) <= f.cut_of(t));
            k.checked_sub(1).map(|i| rels[i])
        })
        .max()
}

/// Abstract graph over last releases and open acquires.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbsGraph {
    /// Trace order.
    pub nodes: Vec<EventId>,
    pub edges: Vec<(EventId, EventId)>,
}

impl AbsGraph {
    pub fn build(eis: &EisTables, idx: &TraceIndex, f: &Frontier) -> Self {
        let mut nodes = Vec::new();
        let mut explicit = Vec::new();
        let nlocks = idx.trace().num_locks();
        let mut open: Vec<Vec<EventId>> = vec![Vec::new(); nlocks];
        for a in f.open_acquires(idx) {
            open[idx.event(a).op.lock().expect("acquire").index()].push(a);
        }
        for (l, open) in open.iter().enumerate() {
            let last = last_release(idx, f, LockId(l as u32));
            nodes.extend(last);
            nodes.extend_from_slice(open);
            if let Some(r) = last {
                explicit.extend(open.iter().map(|&a| (r, a)));
            }
        }
        nodes.sort_unstable();
        nodes.dedup();

        let mut edges = explicit;
        for &u in &nodes {
            let succ = earliest_successors(eis, idx, f, u);
            for &v in &nodes {
                if u != v && succ[idx.thread_of(v).index()].is_some_and(|s| s <= idx.pos(v)) {
                    edges.push((u, v));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        AbsGraph { nodes, edges }
    }

    pub fn is_acyclic(&self) -> bool {
        let local = |e: EventId| self.nodes.binary_search(&e).unwrap();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(u, v) in &self.edges {
            adj[local(u)].push(local(v));
        }
        !has_cycle(&adj)
    }

    pub fn to_dot(&self, idx: &TraceIndex) -> String {
        let mut out = String::from("digraph abstract {\n");
        for &n in &self.nodes {
            let _ = writeln!(out, "  e{} [label=\"{}: {}\"];", n + 1, n + 1, idx.trace().format_event(n));
        }
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "  e{} -> e{};", u + 1, v + 1);
        }
        out.push_str("}\n");
        out
    }
}

fn has_cycle(adj: &[Vec<usize>]) -> bool {
    // 0 = unseen, 1 = on stack, 2 = done.
    let mut state = vec![0u8; adj.len()];
    for root in 0..adj.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (u, ref mut i)) = stack.last_mut() {
            if let Some(&v) = adj[u].get(*i) {
                *i += 1;
                match state[v] {
                    0 => {
                        state[v] = 1;
                        stack.push((v, 0));
                    }
                    1 => return true,
                    _ => {}
                }
            } else {
                state[u] = 2;
                stack.pop();
            }
        }
    }
    false
}

/// Whether the reordering graph over `f` has a cycle, looking only at locks
/// whose open acquire precedes their last release.
pub fn reordering_cycle(eis: &EisTables, idx: &TraceIndex, f: &Frontier) -> bool {
    let backward: Vec<(EventId, EventId)> = open_locks(idx, f)
        .into_iter()
        .filter_map(|s| s.last_release.map(|r| (r, s.open)))
        .flat_map(|(r, open)| open.into_iter().filter(move |&a| a < r).map(move |a| (r, a)))
        .collect();
    if backward.is_empty() {
        return false;
    }
    let adj: Vec<Vec<usize>> = backward
        .iter()
        .map(|&(_, a)| {
            let succ = earliest_successors(eis, idx, f, a);
            backward
                .iter()
                .enumerate()
                .filter(|&(_, &(r, _))| succ[idx.thread_of(r).index()].is_some_and(|s| s <= idx.pos(r)))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    has_cycle(&adj)
}
