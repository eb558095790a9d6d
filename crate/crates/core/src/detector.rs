//! Pair checks and whole-trace detection.

use rayon::prelude::*;

use crate::abs_graph::{reordering_cycle, EisTables};
use crate::closure::{closure, ClosureResult, Frontier};
use crate::index::TraceIndex;
use crate::opt_graph::{witness_for, Witness};
use crate::report::RaceReport;
use crate::trace::{EventId, ThreadId};
use crate::Error;

/// Why a pair was or was not reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    /// A racing event is forced into the closure.
    Absorbed,
    /// The closure leaves two acquires of one lock open.
    LockInfeasible,
    /// The closure cannot be ordered.
    Cyclic,
    Race,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Absorbed => "absorbed",
            Reason::LockInfeasible => "lock-infeasible",
            Reason::Cyclic => "cyclic",
            Reason::Race => "race",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairVerdict {
    pub race: bool,
    pub reason: Reason,
    pub witness: Option<Witness>,
}

/// At most one open acquire per lock.
pub fn lock_feasible(idx: &TraceIndex, f: &Frontier) -> bool {
    let mut seen = vec![false; idx.trace().num_locks()];
    f.open_acquires(idx).into_iter().all(|a| {
        let l = idx.event(a).op.lock().expect("acquire").index();
        !std::mem::replace(&mut seen[l], true)
    })
}

/// Verdict for a computed closure of `(e1, e2)`.
pub fn judge(
    idx: &TraceIndex,
    eis: &EisTables,
    e1: EventId,
    e2: EventId,
    result: &ClosureResult,
    want_witness: bool,
) -> PairVerdict {
    let reason = if result.absorbed {
        Reason::Absorbed
    } else if !lock_feasible(idx, &result.frontier) {
        Reason::LockInfeasible
    } else if reordering_cycle(eis, idx, &result.frontier) {
        Reason::Cyclic
    } else {
        Reason::Race
    };
    let race = reason == Reason::Race;
    let witness = if race && want_witness {
        let w = witness_for(idx, &result.frontier, e1, e2);
        debug_assert!(w.is_some(), "abstract and explicit graphs disagree on ({e1},{e2})");
        w
    } else {
        None
    };
    PairVerdict { race, reason, witness }
}

/// Decides whether two conflicting events race. Order of the arguments does
/// not matter; the witness names the earlier event first.
pub fn check_pair(
    idx: &TraceIndex,
    eis: &EisTables,
    e1: EventId,
    e2: EventId,
    want_witness: bool,
) -> Result<PairVerdict, Error> {
    for e in [e1, e2] {
        if e >= idx.len() {
            return Err(Error::EventOutOfRange { index: e + 1, len: idx.len() });
        }
    }
    if !idx.event(e1).conflicts_with(idx.event(e2)) {
        return Err(Error::NotConflicting(e1 + 1, e2 + 1));
    }
    let (e1, e2) = (e1.min(e2), e1.max(e2));
    let result = closure(idx, e1, e2, &Frontier::empty(idx.num_threads()));
    Ok(judge(idx, eis, e1, e2, &result, want_witness))
}

/// One racing partner found by [`detect_inc`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partner {
    pub event: EventId,
    pub witness: Option<Witness>,
}

/// Earlier events of thread `t` racing with `e`, earliest first. The
/// closure of each candidate seeds the next one. With `first_only`, stops at
/// the first racing partner.
pub fn detect_inc(
    idx: &TraceIndex,
    eis: &EisTables,
    e: EventId,
    t: ThreadId,
    first_only: bool,
    want_witness: bool,
) -> Vec<Partner> {
    let candidates = idx.conflicting_in_thread(e, t);
    let end = candidates.partition_point(|&c| c < e);
    // Partners inside the causal past of `e` are always absorbed.
    let floor = idx.prev(e).map_or(0, |p| idx.clock(p)[t.index()]);
    let start = candidates[..end].partition_point(|&c| idx.pos(c) <= floor);

    let mut out = Vec::new();
    let mut seed = Frontier::empty(idx.num_threads());
    for &c in &candidates[start..end] {
        let result = closure(idx, c, e, &seed);
        if result.absorbed {
            // `e` is in the causal past of `c`, hence of every later candidate.
            break;
        }
        let verdict = judge(idx, eis, c, e, &result, want_witness);
        seed = result.frontier;
        if verdict.race {
            out.push(Partner { event: c, witness: verdict.witness });
            if first_only {
                break;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DetectOptions {
    /// Report every racing pair instead of the first partner per thread.
    pub all_pairs: bool,
    pub witness: bool,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// Runs [`detect_inc`] for every access and every other thread.
pub fn detect_with(idx: &TraceIndex, eis: &EisTables, opts: &DetectOptions) -> RaceReport {
    let run = || {
        let mut found: Vec<(EventId, EventId, Option<Witness>)> = (0..idx.len())
            .into_par_iter()
            .filter(|&e| idx.event(e).op.is_access())
            .flat_map_iter(|e| {
                (0..idx.num_threads() as u32)
                    .map(ThreadId)
                    .filter(move |&t| t != idx.thread_of(e))
                    .flat_map(move |t| detect_inc(idx, eis, e, t, !opts.all_pairs, opts.witness))
                    .map(move |p| (p.event, e, p.witness))
            })
            .collect();
        found.sort_by_key(|&(a, b, _)| (a, b));
        found
    };
    let found = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map(|pool| pool.install(run))
            .unwrap_or_else(|_| run()),
        None => run(),
    };
    let mut pairs = Vec::with_capacity(found.len());
    let mut witnesses = Vec::new();
    for (a, b, w) in found {
        pairs.push((a, b));
        witnesses.extend(w);
    }
    RaceReport::new(idx, pairs, witnesses)
}

/// Builds the successor tables and runs [`detect_with`].
pub fn detect(idx: &TraceIndex, opts: &DetectOptions) -> RaceReport {
    detect_with(idx, &EisTables::new(idx), opts)
}
