//! Derived per-trace structures shared by every analysis.
//!
//! All sets the analyses reason about are closed under the generalized thread
//! order (same-thread predecessor, fork parent for a thread's first event,
//! child's last event for a join) and the reads-from relation. Such a set is
//! fully described by a per-thread cut, and the closure of a single event is
//! captured by a vector timestamp: `f ∈ TLC({e})` iff
//! `pos(f) <= clock(e)[thread(f)]`.

use crate::trace::{Event, EventId, LockId, Op, ThreadId, Trace, VarId, WellFormedReport};
use crate::Error;

/// 1-based position of an event within its thread. Position 0 means "nothing".
pub type Pos = u32;

#[derive(Debug, Clone)]
pub struct TraceIndex {
    trace: Trace,
    nthreads: usize,
    thread_events: Vec<Vec<EventId>>,
    pos: Vec<Pos>,
    matching: Vec<Option<EventId>>,
    last_write: Vec<Option<EventId>>,
    prev: Vec<Option<EventId>>,
    /// For a join event: the last event of the joined thread, if it has any.
    join_input: Vec<Option<EventId>>,
    /// Thread-major cut vectors, `nthreads` entries per event.
    clocks: Vec<Pos>,
    /// Per thread, per cut `c` in `0..=len`: the thread's acquires at
    /// positions `<= c` whose release is absent or after `c`.
    held_offsets: Vec<Vec<u32>>,
    held: Vec<Vec<EventId>>,
    /// Per variable, accesses sorted by (thread, trace index).
    var_accesses: Vec<Vec<EventId>>,
    var_writes: Vec<Vec<EventId>>,
    /// Per variable, accesses in trace order.
    var_accesses_by_time: Vec<Vec<EventId>>,
    /// Per lock, acquires and releases sorted by (thread, trace index).
    lock_acquires: Vec<Vec<EventId>>,
    lock_releases: Vec<Vec<EventId>>,
    /// Per lock, acquires in trace order.
    lock_acquires_by_time: Vec<Vec<EventId>>,
}

impl TraceIndex {
    /// Validates `trace` and builds all indices in left-to-right passes.
    pub fn new(trace: Trace) -> Result<Self, Error> {
        let report = trace.validate();
        if !report.is_ok() {
            return Err(Error::IllFormed(report));
        }
        Ok(Self::build_unchecked(trace, &report))
    }

    fn build_unchecked(trace: Trace, _report: &WellFormedReport) -> Self {
        let n = trace.len();
        let nthreads = trace.num_threads();
        let nvars = trace.num_vars();
        let nlocks = trace.num_locks();

        let mut thread_events: Vec<Vec<EventId>> = vec![Vec::new(); nthreads];
        let mut pos = vec![0; n];
        let mut matching = vec![None; n];
        let mut last_write = vec![None; n];
        let mut prev = vec![None; n];
        let mut join_input = vec![None; n];
        let mut fork_of: Vec<Option<EventId>> = vec![None; nthreads];
        let mut open_acq: Vec<Option<EventId>> = vec![None; nlocks];
        let mut cur_writer: Vec<Option<EventId>> = vec![None; nvars];
        let mut var_accesses_by_time: Vec<Vec<EventId>> = vec![Vec::new(); nvars];
        let mut lock_acquires_by_time: Vec<Vec<EventId>> = vec![Vec::new(); nlocks];

        let mut clocks = vec![0 as Pos; n * nthreads];

        for (e, ev) in trace.events.iter().enumerate() {
            let t = ev.thread.index();
            let p = thread_events[t].last().copied();
            prev[e] = p.or(fork_of[t]);
            thread_events[t].push(e);
            pos[e] = thread_events[t].len() as Pos;

            match ev.op {
                Op::Read(x) => {
                    last_write[e] = cur_writer[x.index()];
                    var_accesses_by_time[x.index()].push(e);
                }
                Op::Write(x) => {
                    cur_writer[x.index()] = Some(e);
                    var_accesses_by_time[x.index()].push(e);
                }
                Op::Acquire(l) => {
                    open_acq[l.index()] = Some(e);
                    lock_acquires_by_time[l.index()].push(e);
                }
                Op::Release(l) => {
                    if let Some(a) = open_acq[l.index()].take() {
                        matching[a] = Some(e);
                        matching[e] = Some(a);
                    }
                }
                Op::Fork(c) => fork_of[c.index()] = Some(e),
                Op::Join(c) => join_input[e] = thread_events[c.index()].last().copied(),
            }

            // clock(e) = join of its closure inputs, plus its own component.
            let (before, rest) = clocks.split_at_mut(e * nthreads);
            let mine = &mut rest[..nthreads];
            for input in [prev[e], last_write[e], join_input[e]].into_iter().flatten() {
                let theirs = &before[input * nthreads..(input + 1) * nthreads];
                for (m, &o) in mine.iter_mut().zip(theirs) {
                    *m = (*m).max(o);
                }
            }
            mine[t] = pos[e];
        }

        let mut held_offsets = Vec::with_capacity(nthreads);
        let mut held = Vec::with_capacity(nthreads);
        for evs in &thread_events {
            let mut offsets = Vec::with_capacity(evs.len() + 1);
            let mut flat = Vec::new();
            let mut current: Vec<EventId> = Vec::new();
            offsets.push(0);
            for &e in evs {
                match trace.events[e].op {
                    Op::Acquire(_) => current.push(e),
                    Op::Release(_) => {
                        if let Some(a) = matching[e] {
                            current.retain(|&x| x != a);
                        }
                    }
                    _ => {}
                }
                flat.extend_from_slice(&current);
                offsets.push(flat.len() as u32);
            }
            held_offsets.push(offsets);
            held.push(flat);
        }

        let key = |e: &EventId| (trace.events[*e].thread, *e);
        let mut var_accesses: Vec<Vec<EventId>> = var_accesses_by_time.clone();
        let mut var_writes: Vec<Vec<EventId>> = var_accesses_by_time
            .iter()
            .map(|v| {
                v.iter()
                    .copied()
                    .filter(|&e| trace.events[e].op.is_write())
                    .collect()
            })
            .collect();
        for v in var_accesses.iter_mut().chain(var_writes.iter_mut()) {
            v.sort_by_key(key);
        }
        let mut lock_acquires = lock_acquires_by_time.clone();
        let mut lock_releases: Vec<Vec<EventId>> = vec![Vec::new(); nlocks];
        for (e, ev) in trace.events.iter().enumerate() {
            if let Op::Release(l) = ev.op {
                lock_releases[l.index()].push(e);
            }
        }
        for v in lock_acquires.iter_mut().chain(lock_releases.iter_mut()) {
            v.sort_by_key(key);
        }

        TraceIndex {
            trace,
            nthreads,
            thread_events,
            pos,
            matching,
            last_write,
            prev,
            join_input,
            clocks,
            held_offsets,
            held,
            var_accesses,
            var_writes,
            var_accesses_by_time,
            lock_acquires,
            lock_releases,
            lock_acquires_by_time,
        }
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.trace.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }

    #[inline]
    pub fn num_threads(&self) -> usize {
        self.nthreads
    }

    #[inline]
    pub fn event(&self, e: EventId) -> &Event {
        &self.trace.events[e]
    }

    #[inline]
    pub fn thread_of(&self, e: EventId) -> ThreadId {
        self.trace.events[e].thread
    }

    #[inline]
    pub fn pos(&self, e: EventId) -> Pos {
        self.pos[e]
    }

    pub fn thread_events(&self, t: ThreadId) -> &[EventId] {
        &self.thread_events[t.index()]
    }

    pub fn thread_len(&self, t: ThreadId) -> Pos {
        self.thread_events[t.index()].len() as Pos
    }

    /// Event at 1-based position `p` of thread `t`.
    #[inline]
    pub fn at(&self, t: ThreadId, p: Pos) -> EventId {
        self.thread_events[t.index()][p as usize - 1]
    }

    /// Matching release of an acquire or matching acquire of a release.
    #[inline]
    pub fn matching(&self, e: EventId) -> Option<EventId> {
        self.matching[e]
    }

    /// The write a read observes in the trace; `None` for reads of the
    /// initial value and for non-reads.
    #[inline]
    pub fn last_write(&self, e: EventId) -> Option<EventId> {
        self.last_write[e]
    }

    /// Generalized thread-order predecessor.
    #[inline]
    pub fn prev(&self, e: EventId) -> Option<EventId> {
        self.prev[e]
    }

    /// For a join, the joined thread's last event.
    #[inline]
    pub fn join_input(&self, e: EventId) -> Option<EventId> {
        self.join_input[e]
    }

    /// Causal cut of `e`: per thread, how many events lie in `TLC({e})`.
    #[inline]
    pub fn clock(&self, e: EventId) -> &[Pos] {
        &self.clocks[e * self.nthreads..(e + 1) * self.nthreads]
    }

    /// Whether `query` lies in the thread-order/reads-from closure of `anchor`.
    #[inline]
    pub fn tlc_contains(&self, anchor: EventId, query: EventId) -> bool {
        self.pos[query] <= self.clock(anchor)[self.thread_of(query).index()]
    }

    /// Acquires of thread `t` that are open when the thread is cut after
    /// position `cut`.
    #[inline]
    pub fn held_at(&self, t: ThreadId, cut: Pos) -> &[EventId] {
        if cut == 0 {
            return &[];
        }
        // Entry p of the offsets marks the end of the held set after position p.
        let offs = &self.held_offsets[t.index()];
        let c = cut as usize;
        &self.held[t.index()][offs[c - 1] as usize..offs[c] as usize]
    }

    pub fn var_accesses(&self, x: VarId) -> &[EventId] {
        &self.var_accesses_by_time[x.index()]
    }

    pub fn lock_acquires(&self, l: LockId) -> &[EventId] {
        &self.lock_acquires_by_time[l.index()]
    }

    fn thread_slice<'a>(&self, list: &'a [EventId], t: ThreadId) -> &'a [EventId] {
        let lo = list.partition_point(|&e| self.thread_of(e) < t);
        let hi = list.partition_point(|&e| self.thread_of(e) <= t);
        &list[lo..hi]
    }

    /// Accesses of `x` by thread `t`, in trace order.
    pub fn thread_var_accesses(&self, x: VarId, t: ThreadId) -> &[EventId] {
        self.thread_slice(&self.var_accesses[x.index()], t)
    }

    /// Writes of `x` by thread `t`, in trace order.
    pub fn thread_var_writes(&self, x: VarId, t: ThreadId) -> &[EventId] {
        self.thread_slice(&self.var_writes[x.index()], t)
    }

    pub fn thread_lock_acquires(&self, l: LockId, t: ThreadId) -> &[EventId] {
        self.thread_slice(&self.lock_acquires[l.index()], t)
    }

    pub fn thread_lock_releases(&self, l: LockId, t: ThreadId) -> &[EventId] {
        self.thread_slice(&self.lock_releases[l.index()], t)
    }

    /// Events of thread `t` that conflict with `e`: all accesses of the
    /// variable if `e` writes, only writes if `e` reads. Empty for
    /// non-accesses and for `t == thread(e)`.
    pub fn conflicting_in_thread(&self, e: EventId, t: ThreadId) -> &[EventId] {
        let ev = self.event(e);
        if ev.thread == t {
            return &[];
        }
        match ev.op {
            Op::Write(x) => self.thread_var_accesses(x, t),
            Op::Read(x) => self.thread_var_writes(x, t),
            _ => &[],
        }
    }
}
