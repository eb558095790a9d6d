//! Exhaustive deciders for small traces, written straight from the
//! definitions and sharing nothing with the fast pipeline except the parsed
//! trace.

use std::collections::HashSet;

use crate::trace::{EventId, Op, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    /// Traces longer than this are not attempted. At most 64.
    pub max_events: usize,
    /// Cap on candidate sets plus explored search states.
    pub max_states: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_events: 24, max_states: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Yes,
    No,
    Unknown,
}

impl OracleVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleVerdict::Yes => "yes",
            OracleVerdict::No => "no",
            OracleVerdict::Unknown => "unknown",
        }
    }
}

/// Is there an optimistic correct reordering over an optimistically
/// lock-closed set enabling both events?
pub fn oracle_osr_race(trace: &Trace, e1: EventId, e2: EventId, budget: OracleBudget) -> OracleVerdict {
    decide(trace, e1, e2, budget, true)
}

/// Is there any correct reordering enabling both events?
pub fn oracle_predictable_race(
    trace: &Trace,
    e1: EventId,
    e2: EventId,
    budget: OracleBudget,
) -> OracleVerdict {
    decide(trace, e1, e2, budget, false)
}

struct Model<'a> {
    trace: &'a Trace,
    per_thread: Vec<Vec<EventId>>,
    prev: Vec<Option<EventId>>,
    join_in: Vec<Option<EventId>>,
    lw: Vec<Option<EventId>>,
    matching: Vec<Option<EventId>>,
    /// Bitmask of the thread-order/reads-from closure of each event.
    closure: Vec<u64>,
}

impl<'a> Model<'a> {
    fn new(trace: &'a Trace) -> Self {
        let n = trace.len();
        let ev = &trace.events;
        let mut per_thread = vec![Vec::new(); trace.num_threads()];
        for (e, x) in ev.iter().enumerate() {
            per_thread[x.thread.index()].push(e);
        }
        let mut prev = vec![None; n];
        let mut join_in = vec![None; n];
        let mut lw = vec![None; n];
        let mut matching = vec![None; n];
        for e in 0..n {
            let t = ev[e].thread;
            prev[e] = (0..e).rev().find(|&f| ev[f].thread == t).or_else(|| {
                (0..e).find(|&f| ev[f].op == Op::Fork(t))
            });
            if let Op::Join(c) = ev[e].op {
                join_in[e] = (0..e).rev().find(|&f| ev[f].thread == c);
            }
            if let Op::Read(x) = ev[e].op {
                lw[e] = (0..e).rev().find(|&f| ev[f].op == Op::Write(x));
            }
            if let Op::Acquire(l) = ev[e].op {
                let r = (e + 1..n).find(|&f| ev[f].thread == t && ev[f].op == Op::Release(l));
                matching[e] = r;
                if let Some(r) = r {
                    matching[r] = Some(e);
                }
            }
        }
        let mut closure: Vec<u64> = (0..n).map(|e| 1u64 << e).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for e in 0..n {
                let mut c = closure[e];
                for f in [prev[e], join_in[e], lw[e]].into_iter().flatten() {
                    c |= closure[f];
                }
                if c != closure[e] {
                    closure[e] = c;
                    changed = true;
                }
            }
        }
        Model { trace, per_thread, prev, join_in, lw, matching, closure }
    }

    fn conflicting(&self, a: EventId, b: EventId) -> bool {
        let (x, y) = (&self.trace.events[a], &self.trace.events[b]);
        x.thread != y.thread
            && x.op.var().is_some()
            && x.op.var() == y.op.var()
            && (x.op.is_write() || y.op.is_write())
    }
}

fn bit(e: EventId) -> u64 {
    1u64 << e
}

fn decide(trace: &Trace, e1: EventId, e2: EventId, budget: OracleBudget, optimistic: bool) -> OracleVerdict {
    let n = trace.len();
    if n > budget.max_events.min(64) {
        return OracleVerdict::Unknown;
    }
    let m = Model::new(trace);
    if e1 >= n || e2 >= n || !m.conflicting(e1, e2) {
        return OracleVerdict::No;
    }
    let mut spent = 0usize;
    let nthreads = m.per_thread.len();
    let mut cut = vec![0usize; nthreads];
    loop {
        spent += 1;
        if spent > budget.max_states {
            return OracleVerdict::Unknown;
        }
        let set: u64 = cut
            .iter()
            .enumerate()
            .flat_map(|(t, &c)| m.per_thread[t][..c].iter())
            .fold(0, |acc, &e| acc | bit(e));
        if admissible(&m, set, e1, e2, optimistic) {
            let mut search = Search { m: &m, set, optimistic, seen: HashSet::new(), spent: &mut spent, budget };
            match search.run() {
                Some(true) => return OracleVerdict::Yes,
                Some(false) => {}
                None => return OracleVerdict::Unknown,
            }
        }
        // Next cut vector in mixed radix.
        let mut t = 0;
        loop {
            if t == nthreads {
                return OracleVerdict::No;
            }
            if cut[t] < m.per_thread[t].len() {
                cut[t] += 1;
                break;
            }
            cut[t] = 0;
            t += 1;
        }
    }
}

fn admissible(m: &Model, set: u64, e1: EventId, e2: EventId, optimistic: bool) -> bool {
    let has = |e: EventId| set & bit(e) != 0;
    if has(e1) || has(e2) {
        return false;
    }
    if [m.prev[e1], m.prev[e2]].into_iter().flatten().any(|p| !has(p)) {
        return false;
    }
    for e in 0..m.trace.len() {
        if has(e) && m.closure[e] & !set != 0 {
            return false;
        }
    }
    if optimistic {
        for a in 0..m.trace.len() {
            if !has(a) || !matches!(m.trace.events[a].op, Op::Acquire(_)) {
                continue;
            }
            if let Some(r) = m.matching[a] {
                let focal = bit(e1) | bit(e2);
                if m.closure[r] & focal == 0 && !has(r) {
                    return false;
                }
            }
        }
    }
    true
}

struct Search<'a, 'b> {
    m: &'a Model<'a>,
    set: u64,
    optimistic: bool,
    seen: HashSet<(u64, Vec<Option<EventId>>)>,
    spent: &'b mut usize,
    budget: OracleBudget,
}

impl Search<'_, '_> {
    /// `Some(found)`, or `None` when the budget ran out.
    fn run(&mut self) -> Option<bool> {
        let writers = vec![None; self.m.trace.num_vars()];
        self.dfs(0, writers)
    }

    fn dfs(&mut self, placed: u64, writers: Vec<Option<EventId>>) -> Option<bool> {
        if placed == self.set {
            return Some(true);
        }
        if !self.seen.insert((placed, writers.clone())) {
            return Some(false);
        }
        *self.spent += 1;
        if *self.spent > self.budget.max_states {
            return None;
        }
        for t in 0..self.m.per_thread.len() {
            let Some(&e) = self.m.per_thread[t].iter().find(|&&e| placed & bit(e) == 0) else {
                continue;
            };
            if self.set & bit(e) == 0 || !self.can_place(placed, &writers, e) {
                continue;
            }
            let mut next = writers.clone();
            if let Op::Write(x) = self.m.trace.events[e].op {
                next[x.index()] = Some(e);
            }
            if self.dfs(placed | bit(e), next)? {
                return Some(true);
            }
        }
        Some(false)
    }

    fn can_place(&self, placed: u64, writers: &[Option<EventId>], e: EventId) -> bool {
        let m = self.m;
        let done = |f: EventId| placed & bit(f) != 0;
        if [m.prev[e], m.join_in[e]].into_iter().flatten().any(|f| !done(f)) {
            return false;
        }
        let ev = &m.trace.events[e];
        match ev.op {
            Op::Read(x) if writers[x.index()] != m.lw[e] => return false,
            Op::Acquire(l) => {
                let held = (0..m.trace.len()).any(|a| {
                    done(a)
                        && m.trace.events[a].op == Op::Acquire(l)
                        && m.matching[a].is_none_or(|r| !done(r))
                });
                if held {
                    return false;
                }
            }
            Op::Release(_) if m.matching[e].is_none_or(|a| !done(a)) => return false,
            _ => {}
        }
        if self.optimistic {
            let in_set = |f: EventId| self.set & bit(f) != 0;
            for f in 0..e {
                if !in_set(f) || done(f) {
                    continue;
                }
                if m.conflicting(f, e) {
                    return false;
                }
                let both_matched = |a: EventId| m.matching[a].is_some_and(in_set);
                if let (Op::Acquire(l1), Op::Acquire(l2)) = (m.trace.events[f].op, ev.op) {
                    if l1 == l2 && both_matched(f) && both_matched(e) {
                        return false;
                    }
                }
            }
        }
        true
    }
}
