//! Independent reference computations and trace corpora for tests.
#![allow(dead_code)]

use osr::gen::{gen_random_trace, RandomConfig};
use osr::trace::{EventId, Op, OpSpec, Trace};
use osr::{Frontier, Pos, ThreadId, TraceIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn index(t: Trace) -> TraceIndex {
    TraceIndex::new(t).expect("well-formed")
}

/// Small random trace, possibly cut short so that acquires stay open.
pub fn small_trace(seed: u64, max_events: usize, threads: usize, locks: usize, vars: usize) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let cfg = RandomConfig {
        threads: rng.gen_range(2..=threads.max(2)),
        locks: rng.gen_range(0..=locks),
        vars: rng.gen_range(1..=vars.max(1)),
        events: rng.gen_range(2..=max_events),
        lock_density: rng.gen_range(0.2..0.9),
        read_ratio: rng.gen_range(0.2..0.7),
        forks: rng.gen_bool(0.2),
    };
    let t = gen_random_trace(&cfg, seed);
    if rng.gen_bool(0.4) {
        let k = rng.gen_range(1..=t.len());
        t.prefix(k)
    } else {
        t
    }
}

/// All ordered conflicting pairs `(earlier, later)`.
pub fn conflicting_pairs(t: &Trace) -> Vec<(EventId, EventId)> {
    let mut out = Vec::new();
    for b in 0..t.len() {
        for a in 0..b {
            if t.events[a].conflicts_with(&t.events[b]) {
                out.push((a, b));
            }
        }
    }
    out
}

/// Closure inputs straight from the definitions, by scanning the trace.
pub struct Naive<'a> {
    pub t: &'a Trace,
    pub prev: Vec<Option<EventId>>,
    pub join_in: Vec<Option<EventId>>,
    pub lw: Vec<Option<EventId>>,
}

impl<'a> Naive<'a> {
    pub fn new(t: &'a Trace) -> Self {
        let ev = &t.events;
        let n = ev.len();
        let prev = (0..n)
            .map(|e| {
                (0..e)
                    .rev()
                    .find(|&f| ev[f].thread == ev[e].thread)
                    .or_else(|| (0..e).find(|&f| ev[f].op == Op::Fork(ev[e].thread)))
            })
            .collect();
        let join_in = (0..n)
            .map(|e| match ev[e].op {
                Op::Join(c) => (0..e).rev().find(|&f| ev[f].thread == c),
                _ => None,
            })
            .collect();
        let lw = (0..n)
            .map(|e| match ev[e].op {
                Op::Read(x) => (0..e).rev().find(|&f| ev[f].op == Op::Write(x)),
                _ => None,
            })
            .collect();
        Naive { t, prev, join_in, lw }
    }

    /// Closure of `{e}` by iterating the rules to a fixpoint.
    pub fn closure_of(&self, e: EventId) -> Vec<bool> {
        let mut inside = vec![false; self.t.len()];
        let mut stack = vec![e];
        while let Some(f) = stack.pop() {
            if std::mem::replace(&mut inside[f], true) {
                continue;
            }
            stack.extend([self.prev[f], self.join_in[f], self.lw[f]].into_iter().flatten());
        }
        inside
    }
}

/// Per-thread earliest one-step successor by scanning the target thread.
pub fn naive_eis(idx: &TraceIndex, e: EventId, t2: ThreadId) -> Option<Pos> {
    let t = idx.trace();
    let ev = &t.events;
    let t1 = ev[e].thread;
    let targets: Vec<EventId> = (0..t.len()).filter(|&f| ev[f].thread == t2).collect();
    if t1 == t2 {
        let k = targets.iter().position(|&f| f == e).unwrap();
        return (k + 1 < targets.len()).then_some(k as Pos + 2);
    }
    let last_of_t1 = (0..t.len()).rev().find(|&f| ev[f].thread == t1) == Some(e);
    targets.iter().enumerate().find_map(|(k, &f)| {
        let edge = (f > e && ev[e].conflicts_with(&ev[f]))
            || (f > e
                && matches!((ev[e].op, ev[f].op), (Op::Release(a), Op::Acquire(b)) if a == b))
            || (k == 0 && ev[e].op == Op::Fork(t2))
            || (last_of_t1 && ev[f].op == Op::Join(t1));
        edge.then_some(k as Pos + 1)
    })
}

/// Forward edges of the reordering graph over `f`, in a form whose
/// reachability equals that of the graph: thread order, every ordered
/// conflicting pair, and every release to a later acquire of its lock.
pub fn forward_edge(idx: &TraceIndex, u: EventId, v: EventId) -> bool {
    if u >= v {
        return false;
    }
    let (a, b) = (idx.event(u), idx.event(v));
    idx.prev(v) == Some(u)
        || idx.join_input(v) == Some(u)
        || a.conflicts_with(b)
        || matches!((a.op, b.op), (Op::Release(x), Op::Acquire(y)) if x == y)
}

/// Earliest reachable position per thread by breadth-first search.
pub fn bfs_successors(idx: &TraceIndex, f: &Frontier, e: EventId) -> Vec<Option<Pos>> {
    let nodes = f.events(idx);
    let mut seen = vec![false; idx.len()];
    seen[e] = true;
    let mut queue = std::collections::VecDeque::from([e]);
    while let Some(u) = queue.pop_front() {
        for &v in &nodes {
            if !seen[v] && forward_edge(idx, u, v) {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    let mut out: Vec<Option<Pos>> = vec![None; idx.num_threads()];
    for &v in &nodes {
        if seen[v] {
            let t = idx.thread_of(v).index();
            out[t] = Some(out[t].map_or(idx.pos(v), |p: Pos| p.min(idx.pos(v))));
        }
    }
    out
}

/// Small trace interleaving per-thread scripts of plain accesses and
/// critical sections holding one to three accesses, possibly cut short.
pub fn scripted_trace(seed: u64, max_events: usize, threads: usize, locks: usize, vars: usize) -> Trace {
    #[derive(Clone, Copy)]
    enum Step {
        Access(bool, usize),
        Acq(usize),
        Rel(usize),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0de);
    let nthreads = rng.gen_range(2..=threads.max(2));
    let nlocks = rng.gen_range(1..=locks.max(1));
    let nvars = rng.gen_range(1..=vars.max(1));
    let budget = rng.gen_range(2..=max_events);
    let access = |rng: &mut ChaCha8Rng| Step::Access(rng.gen_bool(0.5), rng.gen_range(0..nvars));
    let mut scripts: Vec<Vec<Step>> = vec![Vec::new(); nthreads];
    let mut total = 0;
    while total < budget {
        let t = rng.gen_range(0..nthreads);
        if rng.gen_bool(0.6) && total + 3 <= budget {
            let l = rng.gen_range(0..nlocks);
            let k = rng.gen_range(1..=3).min(budget - total - 2);
            scripts[t].push(Step::Acq(l));
            for _ in 0..k {
                let a = access(&mut rng);
                scripts[t].push(a);
            }
            scripts[t].push(Step::Rel(l));
            total += k + 2;
        } else {
            let a = access(&mut rng);
            scripts[t].push(a);
            total += 1;
        }
    }
    let mut trace = Trace::new();
    let mut next = vec![0usize; nthreads];
    let mut held = vec![false; nlocks];
    loop {
        let ready: Vec<usize> = (0..nthreads)
            .filter(|&t| match scripts[t].get(next[t]) {
                Some(Step::Acq(l)) => !held[*l],
                Some(_) => true,
                None => false,
            })
            .collect();
        if ready.is_empty() {
            break;
        }
        let t = ready[rng.gen_range(0..ready.len())];
        let name = format!("T{t}");
        match scripts[t][next[t]] {
            Step::Access(true, x) => trace.push(&name, OpSpec::Read(&format!("x{x}")), None),
            Step::Access(false, x) => trace.push(&name, OpSpec::Write(&format!("x{x}")), None),
            Step::Acq(l) => {
                held[l] = true;
                trace.push(&name, OpSpec::Acquire(&format!("l{l}")), None)
            }
            Step::Rel(l) => {
                held[l] = false;
                trace.push(&name, OpSpec::Release(&format!("l{l}")), None)
            }
        };
        next[t] += 1;
    }
    if rng.gen_bool(0.3) {
        let k = rng.gen_range(1..=trace.len());
        trace.prefix(k)
    } else {
        trace
    }
}
