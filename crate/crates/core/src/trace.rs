//! Execution traces: events, identifiers, the line-oriented text format, and
//! well-formedness checking.
//!
//! A trace file holds one event per line:
//!
//! ```text
//! # comment
//! t1|w(x)|3
//! t2|acq(l)|14
//! t2|r(x)
//! ```
//!
//! The trailing `|<loc>` is optional; when omitted the event's location is
//! the 1-based line number it was read from.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// Dense id of a thread, assigned in order of first appearance.
    ThreadId
);
id_type!(
    /// Dense id of a shared variable.
    VarId
);
id_type!(
    /// Dense id of a lock.
    LockId
);

/// 0-based position of an event in trace order.
pub type EventId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Read(VarId),
    Write(VarId),
    Acquire(LockId),
    Release(LockId),
    Fork(ThreadId),
    Join(ThreadId),
}

impl Op {
    pub fn var(self) -> Option<VarId> {
        match self {
            Op::Read(x) | Op::Write(x) => Some(x),
            _ => None,
        }
    }

    pub fn lock(self) -> Option<LockId> {
        match self {
            Op::Acquire(l) | Op::Release(l) => Some(l),
            _ => None,
        }
    }

    pub fn is_access(self) -> bool {
        matches!(self, Op::Read(_) | Op::Write(_))
    }

    pub fn is_write(self) -> bool {
        matches!(self, Op::Write(_))
    }

    pub fn is_read(self) -> bool {
        matches!(self, Op::Read(_))
    }

    fn mnemonic(self) -> &'static str {
        match self {
            Op::Read(_) => "r",
            Op::Write(_) => "w",
            Op::Acquire(_) => "acq",
            Op::Release(_) => "rel",
            Op::Fork(_) => "fork",
            Op::Join(_) => "join",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub thread: ThreadId,
    pub op: Op,
    pub loc: u32,
}

impl Event {
    /// Two accesses to the same variable from different threads, at least
    /// one of them a write.
    pub fn conflicts_with(&self, other: &Event) -> bool {
        if self.thread == other.thread {
            return false;
        }
        match (self.op, other.op) {
            (Op::Write(x), Op::Write(y)) | (Op::Write(x), Op::Read(y)) | (Op::Read(x), Op::Write(y)) => {
                x == y
            }
            _ => false,
        }
    }
}

/// Interning table from identifier text to dense ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Names {
    names: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl Names {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.lookup.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.lookup.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// A parsed trace. Event order in `events` is trace order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<Event>,
    pub threads: Names,
    pub vars: Names,
    pub locks: Names,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected `<thread>|<op>(<operand>)[|<loc>]`")]
    Syntax,
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error("missing operand")]
    MissingOperand,
    #[error("invalid identifier `{0}`")]
    BadIdentifier(String),
    #[error("invalid location `{0}`")]
    BadLocation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'.')
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn num_threads(&self) -> usize {
        self.threads.len()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_locks(&self) -> usize {
        self.locks.len()
    }

    /// Appends an event, interning its identifiers. `loc` defaults to the
    /// 1-based position of the event.
    pub fn push(&mut self, thread: &str, op: OpSpec<'_>, loc: Option<u32>) -> EventId {
        let thread = ThreadId(self.threads.intern(thread));
        let op = match op {
            OpSpec::Read(x) => Op::Read(VarId(self.vars.intern(x))),
            OpSpec::Write(x) => Op::Write(VarId(self.vars.intern(x))),
            OpSpec::Acquire(l) => Op::Acquire(LockId(self.locks.intern(l))),
            OpSpec::Release(l) => Op::Release(LockId(self.locks.intern(l))),
            OpSpec::Fork(t) => Op::Fork(ThreadId(self.threads.intern(t))),
            OpSpec::Join(t) => Op::Join(ThreadId(self.threads.intern(t))),
        };
        let id = self.events.len();
        let loc = loc.unwrap_or(id as u32 + 1);
        self.events.push(Event { thread, op, loc });
        id
    }

    pub fn parse(text: &str) -> Result<Trace, ParseError> {
        let mut trace = Trace::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let err = |kind| ParseError { line, kind };
            let mut fields = body.split('|');
            let thread = fields.next().ok_or_else(|| err(ParseErrorKind::Syntax))?.trim();
            let op_field = fields.next().ok_or_else(|| err(ParseErrorKind::Syntax))?.trim();
            let loc_field = fields.next().map(str::trim);
            if fields.next().is_some() {
                return Err(err(ParseErrorKind::Syntax));
            }
            if !is_identifier(thread) {
                return Err(err(ParseErrorKind::BadIdentifier(thread.to_owned())));
            }
            let open = op_field.find('(').ok_or_else(|| err(ParseErrorKind::Syntax))?;
            if !op_field.ends_with(')') {
                return Err(err(ParseErrorKind::Syntax));
            }
            let mnemonic = &op_field[..open];
            let operand = op_field[open + 1..op_field.len() - 1].trim();
            let spec = match mnemonic {
                "r" => OpSpec::Read(operand),
                "w" => OpSpec::Write(operand),
                "acq" => OpSpec::Acquire(operand),
                "rel" => OpSpec::Release(operand),
                "fork" => OpSpec::Fork(operand),
                "join" => OpSpec::Join(operand),
                other => return Err(err(ParseErrorKind::UnknownOp(other.to_owned()))),
            };
            if operand.is_empty() {
                return Err(err(ParseErrorKind::MissingOperand));
            }
            if !is_identifier(operand) {
                return Err(err(ParseErrorKind::BadIdentifier(operand.to_owned())));
            }
            let loc = match loc_field {
                None => line as u32,
                Some(s) => s
                    .parse::<u32>()
                    .map_err(|_| err(ParseErrorKind::BadLocation(s.to_owned())))?,
            };
            trace.push(thread, spec, Some(loc));
        }
        Ok(trace)
    }

    /// One line of the trace format for event `e`, without a newline.
    pub fn format_event(&self, e: EventId) -> String {
        let ev = &self.events[e];
        let operand = match ev.op {
            Op::Read(x) | Op::Write(x) => self.vars.name(x.0),
            Op::Acquire(l) | Op::Release(l) => self.locks.name(l.0),
            Op::Fork(t) | Op::Join(t) => self.threads.name(t.0),
        };
        format!(
            "{}|{}({})|{}",
            self.threads.name(ev.thread.0),
            ev.op.mnemonic(),
            operand,
            ev.loc
        )
    }

    /// Serializes every event, one per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.events.len() * 16);
        for e in 0..self.events.len() {
            out.push_str(&self.format_event(e));
            out.push('\n');
        }
        out
    }

    /// The first `k` events, keeping the identifier tables.
    pub fn prefix(&self, k: usize) -> Trace {
        Trace {
            events: self.events[..k.min(self.events.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn thread_name(&self, t: ThreadId) -> &str {
        self.threads.name(t.0)
    }

    pub fn var_name(&self, x: VarId) -> &str {
        self.vars.name(x.0)
    }

    pub fn lock_name(&self, l: LockId) -> &str {
        self.locks.name(l.0)
    }

    /// Checks lock semantics and fork/join discipline.
    pub fn validate(&self) -> WellFormedReport {
        let mut report = WellFormedReport::default();
        let mut holder: Vec<Option<EventId>> = vec![None; self.num_locks()];
        let nthreads = self.num_threads();
        let mut forked: Vec<Option<EventId>> = vec![None; nthreads];
        let mut joined: Vec<Option<EventId>> = vec![None; nthreads];
        let mut has_events = vec![false; nthreads];

        for (e, ev) in self.events.iter().enumerate() {
            let t = ev.thread.index();
            if let Some(j) = joined[t] {
                report.violations.push(Violation::EventAfterJoin { event: e, join: j });
            }
            has_events[t] = true;
            match ev.op {
                Op::Acquire(l) => match holder[l.index()] {
                    Some(held) => report
                        .violations
                        .push(Violation::DoubleAcquire { event: e, held_by: held }),
                    None => holder[l.index()] = Some(e),
                },
                Op::Release(l) => match holder[l.index()] {
                    Some(a) if self.events[a].thread == ev.thread => holder[l.index()] = None,
                    _ => report.violations.push(Violation::UnmatchedRelease { event: e }),
                },
                Op::Fork(c) => {
                    let ci = c.index();
                    if c == ev.thread {
                        report.violations.push(Violation::SelfFork { event: e });
                    } else if forked[ci].is_some() {
                        report.violations.push(Violation::DuplicateFork { event: e });
                    } else if has_events[ci] {
                        report.violations.push(Violation::EventBeforeFork { fork: e, thread: c });
                    } else {
                        forked[ci] = Some(e);
                    }
                }
                Op::Join(c) => {
                    let ci = c.index();
                    if c == ev.thread {
                        report.violations.push(Violation::SelfJoin { event: e });
                    } else if joined[ci].is_some() {
                        report.violations.push(Violation::DuplicateJoin { event: e });
                    } else {
                        joined[ci] = Some(e);
                    }
                }
                Op::Read(_) | Op::Write(_) => {}
            }
        }
        for a in holder.into_iter().flatten() {
            report.unmatched_acquires.push(a);
        }
        report.unmatched_acquires.sort_unstable();
        report
    }
}

/// Borrowed operation description used when building traces programmatically.
#[derive(Debug, Clone, Copy)]
pub enum OpSpec<'a> {
    Read(&'a str),
    Write(&'a str),
    Acquire(&'a str),
    Release(&'a str),
    Fork(&'a str),
    Join(&'a str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DoubleAcquire { event: EventId, held_by: EventId },
    UnmatchedRelease { event: EventId },
    EventBeforeFork { fork: EventId, thread: ThreadId },
    EventAfterJoin { event: EventId, join: EventId },
    SelfFork { event: EventId },
    SelfJoin { event: EventId },
    DuplicateFork { event: EventId },
    DuplicateJoin { event: EventId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Event numbers are printed 1-based, like the CLI takes them.
        match *self {
            Violation::DoubleAcquire { event, held_by } => write!(
                f,
                "event {}: acquires a lock still held since event {}",
                event + 1,
                held_by + 1
            ),
            Violation::UnmatchedRelease { event } => write!(
                f,
                "event {}: release without a matching acquire by the same thread",
                event + 1
            ),
            Violation::EventBeforeFork { fork, thread } => write!(
                f,
                "event {}: forks thread #{} which already has events",
                fork + 1,
                thread.0
            ),
            Violation::EventAfterJoin { event, join } => write!(
                f,
                "event {}: thread already joined at event {}",
                event + 1,
                join + 1
            ),
            Violation::SelfFork { event } => write!(f, "event {}: thread forks itself", event + 1),
            Violation::SelfJoin { event } => write!(f, "event {}: thread joins itself", event + 1),
            Violation::DuplicateFork { event } => {
                write!(f, "event {}: thread is forked a second time", event + 1)
            }
            Violation::DuplicateJoin { event } => {
                write!(f, "event {}: thread is joined a second time", event + 1)
            }
        }
    }
}

/// Outcome of [`Trace::validate`]. Trailing unmatched acquires are legal
/// (the trace is a prefix of a well-formed run) and reported separately.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WellFormedReport {
    pub violations: Vec<Violation>,
    pub unmatched_acquires: Vec<EventId>,
}

impl WellFormedReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for WellFormedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
