use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use osr::abs_graph::{AbsGraph, EisTables};
use osr::detector::{check_pair, detect_with, DetectOptions};
use osr::gen::{gen_ov_trace, gen_random_trace, OvInstance, RandomConfig};
use osr::opt_graph::validate_witness;
use osr::oracle::{oracle_osr_race, oracle_predictable_race, OracleBudget, OracleVerdict};
use osr::report::Mode;
use osr::{closure, Frontier, Op, Trace, TraceIndex};

#[derive(Parser)]
#[command(name = "osr", version, about = "Predict optimistic sync-reversal data races in execution traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report racing pairs in a trace.
    Detect {
        trace: PathBuf,
        #[arg(long, default_value = "events")]
        mode: Mode,
        /// Build and check a witness reordering for every reported pair.
        #[arg(long)]
        witness: bool,
        /// Report every racing pair, not only the first partner per thread.
        #[arg(long)]
        all_pairs: bool,
        /// Write the pairs as JSON Lines.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check one pair of events (1-based indices).
    Pair {
        trace: PathBuf,
        i: usize,
        j: usize,
        /// Emit a witness reordering if the pair races.
        #[arg(long)]
        witness: bool,
        /// Witness destination; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump the abstract graph of the pair's closure in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Decide a pair by exhaustive search (small traces only).
    Oracle {
        trace: PathBuf,
        i: usize,
        j: usize,
        /// Maximum number of explored search states.
        #[arg(long, default_value_t = OracleBudget::default().max_states)]
        budget: usize,
        /// Maximum trace length attempted.
        #[arg(long, default_value_t = OracleBudget::default().max_events)]
        max_events: usize,
    },
    /// Check well-formedness.
    Validate { trace: PathBuf },
    /// Build the trace of an orthogonal-vectors instance.
    GenOv {
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random well-formed trace.
    GenRandom(RandomArgs),
    /// Print trace statistics.
    Stats { trace: PathBuf },
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long, default_value_t = 4)]
    threads: usize,
    #[arg(long, default_value_t = 3)]
    locks: usize,
    #[arg(long, default_value_t = 4)]
    vars: usize,
    #[arg(long, default_value_t = 200)]
    events: usize,
    #[arg(long, default_value_t = 0.3)]
    lock_density: f64,
    #[arg(long, default_value_t = 0.5)]
    read_ratio: f64,
    /// Start threads through forks from T0.
    #[arg(long)]
    forks: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<TraceIndex> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let trace = Trace::parse(&text).with_context(|| format!("in {}", path.display()))?;
    TraceIndex::new(trace).with_context(|| format!("in {}", path.display()))
}

fn event_arg(idx: &TraceIndex, i: usize) -> Result<usize> {
    if i == 0 || i > idx.len() {
        bail!("event {i} is out of range (trace has {} events)", idx.len());
    }
    Ok(i - 1)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("cannot write output"),
    }
}

fn worker_cap() -> Option<usize> {
    std::env::var("OSR_THREADS").ok()?.trim().parse().ok().filter(|&n| n > 0)
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Detect { trace, mode, witness, all_pairs, out } => {
            let idx = load(&trace)?;
            let eis = EisTables::new(&idx);
            let opts = DetectOptions { all_pairs, witness, threads: worker_cap() };
            let report = detect_with(&idx, &eis, &opts);
            if witness {
                for w in &report.witnesses {
                    if let Err(v) = validate_witness(&idx, &w.order, w.focal.0, w.focal.1) {
                        bail!("witness for ({},{}) is invalid: {v}", w.focal.0 + 1, w.focal.1 + 1);
                    }
                }
                println!("witnesses checked: {}", report.witnesses.len());
            }
            println!("racy pairs: {}", report.pairs.len());
            println!("{}", report.summary(mode));
            if let Some(path) = out {
                let file = fs::File::create(&path)
                    .with_context(|| format!("cannot write {}", path.display()))?;
                report.write_jsonl(&idx, io::BufWriter::new(file))?;
            }
            Ok(u8::from(!report.pairs.is_empty()))
        }
        Command::Pair { trace, i, j, witness, out, dot } => {
            let idx = load(&trace)?;
            let (e1, e2) = (event_arg(&idx, i)?, event_arg(&idx, j)?);
            let eis = EisTables::new(&idx);
            let verdict = check_pair(&idx, &eis, e1, e2, witness)?;
            if let Some(path) = dot {
                let r = closure(&idx, e1.min(e2), e1.max(e2), &Frontier::empty(idx.num_threads()));
                let g = AbsGraph::build(&eis, &idx, &r.frontier);
                fs::write(&path, g.to_dot(&idx))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            if verdict.race {
                println!("({i},{j}): race");
            } else {
                println!("({i},{j}): no race ({})", verdict.reason.as_str());
            }
            if let Some(w) = &verdict.witness {
                emit(out.as_deref(), &w.to_text(&idx))?;
            }
            Ok(u8::from(verdict.race))
        }
        Command::Oracle { trace, i, j, budget, max_events } => {
            let idx = load(&trace)?;
            let (e1, e2) = (event_arg(&idx, i)?, event_arg(&idx, j)?);
            if !idx.event(e1).conflicts_with(idx.event(e2)) {
                bail!("events {i} and {j} are not a conflicting pair");
            }
            let budget = OracleBudget { max_events, max_states: budget };
            let osr = oracle_osr_race(idx.trace(), e1, e2, budget);
            let predictable = oracle_predictable_race(idx.trace(), e1, e2, budget);
            println!("optimistic sync-reversal race: {}", osr.as_str());
            println!("predictable race: {}", predictable.as_str());
            Ok(u8::from(osr == OracleVerdict::Yes))
        }
        Command::Validate { trace } => {
            let text = fs::read_to_string(&trace)
                .with_context(|| format!("cannot read {}", trace.display()))?;
            let parsed = Trace::parse(&text).with_context(|| format!("in {}", trace.display()))?;
            let report = parsed.validate();
            for v in &report.violations {
                println!("violation: {v}");
            }
            for &a in &report.unmatched_acquires {
                println!("info: event {} is an acquire without a release", a + 1);
            }
            if report.is_ok() {
                println!("ok");
                Ok(0)
            } else {
                Ok(2)
            }
        }
        Command::GenOv { instance, out } => {
            let text = fs::read_to_string(&instance)
                .with_context(|| format!("cannot read {}", instance.display()))?;
            let inst = OvInstance::parse(&text)?;
            emit(out.as_deref(), &gen_ov_trace(&inst).to_text())?;
            Ok(0)
        }
        Command::GenRandom(a) => {
            if a.threads == 0 || a.vars == 0 {
                bail!("--threads and --vars must be positive");
            }
            let cfg = RandomConfig {
                threads: a.threads,
                locks: a.locks,
                vars: a.vars,
                events: a.events,
                lock_density: a.lock_density,
                read_ratio: a.read_ratio,
                forks: a.forks,
            };
            emit(a.out.as_deref(), &gen_random_trace(&cfg, a.seed).to_text())?;
            Ok(0)
        }
        Command::Stats { trace } => {
            let idx = load(&trace)?;
            let t = idx.trace();
            let count = |f: fn(&Op) -> bool| t.events.iter().filter(|e| f(&e.op)).count();
            println!("events: {}", t.len());
            println!("threads: {}", t.num_threads());
            println!("variables: {}", t.num_vars());
            println!("locks: {}", t.num_locks());
            println!("reads: {}", count(|o| matches!(o, Op::Read(_))));
            println!("writes: {}", count(|o| matches!(o, Op::Write(_))));
            println!("acquires: {}", count(|o| matches!(o, Op::Acquire(_))));
            println!("releases: {}", count(|o| matches!(o, Op::Release(_))));
            println!("forks: {}", count(|o| matches!(o, Op::Fork(_))));
            println!("joins: {}", count(|o| matches!(o, Op::Join(_))));
            Ok(0)
        }
    }
}
