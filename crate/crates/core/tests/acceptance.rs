//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use osr::abs_graph::{reordering_cycle, AbsGraph, EisTables};
use osr::closure::closure;
use osr::detector::{check_pair, detect, detect_inc, detect_with, lock_feasible, DetectOptions, Reason};
use osr::fixtures;
use osr::gen::{gen_ov_trace, gen_random_trace, OvInstance, RandomConfig};
use osr::opt_graph::{validate_witness, OptGraph};
use osr::oracle::{oracle_osr_race, oracle_predictable_race, OracleBudget, OracleVerdict};
use osr::rmq::SparseMin;
use osr::trace::Trace;
use osr::{Frontier, ThreadId, TraceIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("{what} took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn golden_micro_traces() -> Check {
    let start = Instant::now();
    let empty = |idx: &TraceIndex| Frontier::empty(idx.num_threads());

    let idx = index(fixtures::critical_section_reversal());
    let eis = EisTables::new(&idx);
    let closed = closure(&idx, 0, 11, &empty(&idx));
    ensure(closed.frontier.events(&idx) == vec![2, 3, 6, 7, 8, 9, 10], || {
        format!("closure of (1,12) is {:?}", closed.frontier.events(&idx))
    })?;
    let v = check_pair(&idx, &eis, 0, 11, true).map_err(|e| e.to_string())?;
    ensure(v.race, || "(1,12) not reported".into())?;
    let w = v.witness.ok_or("no witness for (1,12)")?;
    ensure(w.order.len() >= 7, || "witness shorter than 7 events".into())?;
    validate_witness(&idx, &w.order[..7], 0, 11).map_err(|e| format!("witness for (1,12): {e}"))?;

    let idx = index(fixtures::reordered_prefix());
    let eis = EisTables::new(&idx);
    let closed = closure(&idx, 0, 4, &empty(&idx));
    ensure(closed.frontier.events(&idx) == vec![3], || "closure of (1,5) is not {4}".into())?;
    ensure(check_pair(&idx, &eis, 0, 4, false).unwrap().race, || "(1,5) not reported".into())?;

    let idx = index(fixtures::cyclic_reordering());
    let eis = EisTables::new(&idx);
    let v = check_pair(&idx, &eis, 3, 8, false).unwrap();
    ensure(!v.race && v.reason == Reason::Cyclic, || format!("(4,9) gave {:?}", v.reason))?;

    let idx = index(fixtures::double_open_acquire());
    let eis = EisTables::new(&idx);
    let v = check_pair(&idx, &eis, 0, 20, false).unwrap();
    ensure(!v.race, || "(1,21) reported".into())?;

    let idx = index(fixtures::memory_order_reversal());
    let eis = EisTables::new(&idx);
    let v = check_pair(&idx, &eis, 9, 18, false).unwrap();
    ensure(!v.race, || "(10,19) reported".into())?;
    let pred = oracle_predictable_race(idx.trace(), 9, 18, OracleBudget::default());
    ensure(pred == OracleVerdict::Yes, || format!("(10,19) predictable oracle says {pred:?}"))?;

    let took = within(start, Duration::from_secs(1), "golden traces")?;
    Ok(format!("5 traces in {took:.2?}"))
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let budget = OracleBudget::default();
    let (mut decided, mut unknown, mut races, mut gap) = (0usize, 0usize, 0usize, 0usize);
    let mut reasons = [0usize; 4];
    for seed in 0..1000u64 {
        let t = if seed % 2 == 0 {
            scripted_trace(seed, 12, 3, 2, 2)
        } else {
            small_trace(seed, 12, 3, 2, 2)
        };
        let idx = index(t.clone());
        let eis = EisTables::new(&idx);
        for (a, b) in conflicting_pairs(&t) {
            let verdict = check_pair(&idx, &eis, a, b, false).unwrap();
            reasons[verdict.reason as usize] += 1;
            let fast = verdict.race;
            match oracle_osr_race(&t, a, b, budget) {
                OracleVerdict::Unknown => unknown += 1,
                verdict => {
                    decided += 1;
                    let slow = verdict == OracleVerdict::Yes;
                    ensure(fast == slow, || {
                        format!("seed {seed} pair ({},{}): fast {fast}, oracle {slow}\n{}", a + 1, b + 1, t.to_text())
                    })?;
                    let pred = oracle_predictable_race(&t, a, b, budget);
                    if slow {
                        races += 1;
                        ensure(pred != OracleVerdict::No, || {
                            format!("seed {seed} pair ({},{}) races but is not predictable", a + 1, b + 1)
                        })?;
                    } else if pred == OracleVerdict::Yes {
                        gap += 1;
                    }
                }
            }
        }
    }
    let took = within(start, Duration::from_secs(300), "oracle comparison")?;
    Ok(format!(
        "{decided} pairs decided ({races} races, {gap} predictable only; rejected as absorbed {}, \
         lock-infeasible {}, cyclic {}), {unknown} unknown, {took:.1?}",
        reasons[Reason::Absorbed as usize],
        reasons[Reason::LockInfeasible as usize],
        reasons[Reason::Cyclic as usize],
    ))
}

/// Replays the all-pairs sweep, handing every examined frontier to `visit`.
fn sweep_frontiers(idx: &TraceIndex, mut visit: impl FnMut(usize, usize, &Frontier, &Frontier)) {
    for e in 0..idx.len() {
        if !idx.event(e).op.is_access() {
            continue;
        }
        for th in 0..idx.num_threads() as u32 {
            let mut seed = Frontier::empty(idx.num_threads());
            for &c in idx.conflicting_in_thread(e, ThreadId(th)).iter().filter(|&&c| c < e) {
                let r = closure(idx, c, e, &seed);
                if r.absorbed {
                    break;
                }
                visit(c, e, &seed, &r.frontier);
                seed = r.frontier;
            }
        }
    }
}

fn abstraction_equivalence() -> Check {
    let start = Instant::now();
    let mut compared = 0usize;
    let mut cyclic = 0usize;
    for seed in 0..500u64 {
        let t = if seed % 2 == 0 {
            scripted_trace(seed, 300, 6, 4, 4)
        } else {
            small_trace(seed, 300, 6, 4, 4)
        };
        let idx = index(t);
        let eis = EisTables::new(&idx);
        let mut failure = None;
        sweep_frontiers(&idx, |c, e, _, f| {
            if failure.is_some() || !lock_feasible(&idx, f) {
                return;
            }
            let explicit = OptGraph::build(&idx, f).is_acyclic();
            let abs = AbsGraph::build(&eis, &idx, f).is_acyclic();
            let fast = !reordering_cycle(&eis, &idx, f);
            compared += 1;
            cyclic += usize::from(!explicit);
            if explicit != abs || explicit != fast {
                failure = Some(format!(
                    "seed {seed} pair ({},{}): explicit {explicit}, abstract {abs}, backward-edge check {fast}",
                    c + 1,
                    e + 1
                ));
            }
        });
        if let Some(f) = failure {
            return Err(f);
        }
    }
    let took = within(start, Duration::from_secs(600), "graph comparison")?;
    Ok(format!("{compared} frontiers ({cyclic} cyclic), {took:.1?}"))
}

fn incrementality() -> Check {
    let start = Instant::now();
    let (mut pairs, mut frontiers) = (0usize, 0usize);
    for seed in 0..200u64 {
        let t = if seed % 2 == 0 {
            scripted_trace(seed + 10_000, 200, 5, 3, 3)
        } else {
            small_trace(seed + 10_000, 200, 5, 3, 3)
        };
        let idx = index(t);
        let eis = EisTables::new(&idx);
        for e in 0..idx.len() {
            for th in 0..idx.num_threads() as u32 {
                let th = ThreadId(th);
                let got: Vec<usize> =
                    detect_inc(&idx, &eis, e, th, false, false).into_iter().map(|p| p.event).collect();
                let want: Vec<usize> = idx
                    .conflicting_in_thread(e, th)
                    .iter()
                    .copied()
                    .filter(|&c| c < e && check_pair(&idx, &eis, c, e, false).unwrap().race)
                    .collect();
                ensure(got == want, || format!("seed {seed} event {}: {got:?} vs {want:?}", e + 1))?;
                pairs += want.len();
            }
        }
        let mut failure = None;
        sweep_frontiers(&idx, |c, e, _, seeded| {
            let scratch = closure(&idx, c, e, &Frontier::empty(idx.num_threads()));
            frontiers += 1;
            if scratch.absorbed || &scratch.frontier != seeded {
                failure.get_or_insert_with(|| format!("seed {seed} pair ({},{}) closure differs", c + 1, e + 1));
            }
        });
        if let Some(f) = failure {
            return Err(f);
        }
    }
    let took = start.elapsed();
    Ok(format!("{pairs} racing pairs, {frontiers} seeded closures, {took:.1?}"))
}

fn soundness() -> Check {
    let mut corpus: Vec<Trace> = fixtures::all().into_iter().map(|(_, t)| t).collect();
    for seed in 0..150 {
        corpus.push(small_trace(seed + 20_000, 300, 6, 4, 4));
        corpus.push(scripted_trace(seed + 20_000, 300, 6, 4, 4));
    }
    for seed in 0..20 {
        let cfg = RandomConfig { threads: 6, locks: 4, vars: 6, events: 2000, forks: seed % 2 == 0, ..Default::default() };
        corpus.push(gen_random_trace(&cfg, seed));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        corpus.push(gen_ov_trace(&OvInstance::random(&mut rng, 10, 5, 0.5)));
    }
    let mut checked = 0usize;
    for (k, t) in corpus.into_iter().enumerate() {
        let idx = index(t);
        for all_pairs in [false, true] {
            let r = detect(&idx, &DetectOptions { all_pairs, witness: true, threads: None });
            ensure(r.witnesses.len() == r.pairs.len(), || format!("trace {k}: missing witnesses"))?;
            for (w, &(a, b)) in r.witnesses.iter().zip(&r.pairs) {
                ensure(w.focal == (a, b), || format!("trace {k}: witness names the wrong pair"))?;
                validate_witness(&idx, &w.order, a, b)
                    .map_err(|v| format!("trace {k} pair ({},{}): {v}", a + 1, b + 1))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} witnesses valid"))
}

fn ov_reduction() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut yes, mut no) = (0, 0);
    for k in 0..200 {
        let density = rng.gen_range(0.3..0.85);
        let inst = OvInstance::random(&mut rng, 50, 8, density);
        let idx = index(gen_ov_trace(&inst));
        let found = !detect(&idx, &DetectOptions::default()).pairs.is_empty();
        let expected = inst.has_orthogonal_pair();
        ensure(found == expected, || format!("instance {k}: detector {found}, scan {expected}\n{}", inst.to_text()))?;
        if expected {
            yes += 1
        } else {
            no += 1
        }
    }
    let took = within(start, Duration::from_secs(120), "vector instances")?;
    Ok(format!("{yes} with and {no} without an orthogonal pair, {took:.1?}"))
}

fn scaling() -> Check {
    let sizes = [10_000usize, 30_000, 100_000];
    let mut points = Vec::new();
    let mut detail = Vec::new();
    for &n in &sizes {
        let cfg = RandomConfig { threads: 8, locks: 8, vars: 32, events: n, lock_density: 0.3, read_ratio: 0.5, forks: false };
        let t = gen_random_trace(&cfg, 7);
        let start = Instant::now();
        let idx = TraceIndex::new(t).map_err(|e| e.to_string())?;
        let eis = EisTables::new(&idx);
        let r = detect_with(&idx, &eis, &DetectOptions::default());
        let secs = start.elapsed().as_secs_f64().max(1e-3);
        detail.push(format!("{n}: {secs:.2}s ({} racy events)", r.racy_events.len()));
        points.push(((n as f64).ln(), secs.ln()));
    }
    let last = points.last().unwrap().1.exp();
    ensure(last < 300.0, || format!("largest trace took {last:.1}s"))?;
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = points.iter().map(|&(x, _)| (x - mx).powi(2)).sum();
    let slope = num / den;
    ensure(slope <= 2.2, || format!("log-log slope {slope:.2} ({})", detail.join(", ")))?;
    Ok(format!("slope {slope:.2}; {}", detail.join(", ")))
}

fn rmq_and_eis() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut probes = 0;
    while probes < 10_000 {
        let len = rng.gen_range(1..600);
        let values: Vec<u32> = (0..len).map(|_| rng.gen_range(0..1000)).collect();
        let table = SparseMin::new(values.clone());
        for _ in 0..100 {
            let (a, b) = (rng.gen_range(0..len), rng.gen_range(0..len));
            let (lo, hi) = (a.min(b), a.max(b));
            let want = *values[lo..=hi].iter().min().unwrap();
            ensure(table.min(lo, hi) == want, || format!("range {lo}..={hi} of {values:?}"))?;
            probes += 1;
        }
    }
    let mut entries = 0;
    for seed in 0..40u64 {
        let t = small_trace(seed + 30_000, 500, 6, 4, 4);
        let idx = index(t);
        let eis = EisTables::new(&idx);
        for e in 0..idx.len() {
            for t2 in 0..idx.num_threads() as u32 {
                let t2 = ThreadId(t2);
                let got = eis.entry(idx.thread_of(e), t2, idx.pos(e));
                let want = naive_eis(&idx, e, t2);
                ensure(got == want, || format!("seed {seed} event {} thread {}: {got:?} vs {want:?}", e + 1, t2.0))?;
                entries += 1;
            }
        }
    }
    Ok(format!("{probes} range probes, {entries} table entries"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("golden micro-traces", golden_micro_traces),
        ("oracle equivalence", oracle_equivalence),
        ("graph abstraction equivalence", abstraction_equivalence),
        ("incrementality", incrementality),
        ("witness soundness", soundness),
        ("orthogonal-vectors reduction", ov_reduction),
        ("scaling", scaling),
        ("range-minimum and successor tables", rmq_and_eis),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let n = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == n.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(detail) => println!("PASS {n}. {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n}. {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
