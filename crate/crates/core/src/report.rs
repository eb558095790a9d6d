//! Race reports, aggregate counts and JSON Lines output.

use std::collections::BTreeSet;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use crate::index::TraceIndex;
use crate::opt_graph::Witness;
use crate::trace::{EventId, VarId};

/// What to count as one reported race.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Events,
    Locations,
    Variables,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Events => "racy events",
            Mode::Locations => "racy locations",
            Mode::Variables => "racy variables",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "events" => Ok(Mode::Events),
            "locations" => Ok(Mode::Locations),
            "variables" => Ok(Mode::Variables),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RaceReport {
    /// `(earlier, later)`, sorted.
    pub pairs: Vec<(EventId, EventId)>,
    /// One per pair when witnesses were requested, otherwise empty.
    pub witnesses: Vec<Witness>,
    pub racy_events: BTreeSet<EventId>,
    pub racy_locations: BTreeSet<u32>,
    pub racy_variables: BTreeSet<VarId>,
}

impl RaceReport {
    pub fn new(idx: &TraceIndex, pairs: Vec<(EventId, EventId)>, witnesses: Vec<Witness>) -> Self {
        let racy_events: BTreeSet<EventId> = pairs.iter().map(|&(_, b)| b).collect();
        let racy_locations = racy_events.iter().map(|&e| idx.event(e).loc).collect();
        let racy_variables = racy_events
            .iter()
            .filter_map(|&e| idx.event(e).op.var())
            .collect();
        RaceReport { pairs, witnesses, racy_events, racy_locations, racy_variables }
    }

    pub fn count(&self, mode: Mode) -> usize {
        match mode {
            Mode::Events => self.racy_events.len(),
            Mode::Locations => self.racy_locations.len(),
            Mode::Variables => self.racy_variables.len(),
        }
    }

    /// For example `racy events: 1`.
    pub fn summary(&self, mode: Mode) -> String {
        format!("{}: {}", mode.label(), self.count(mode))
    }

    /// One JSON object per pair, then a summary object.
    pub fn write_jsonl(&self, idx: &TraceIndex, mut out: impl Write) -> io::Result<()> {
        let trace = idx.trace();
        for &(a, b) in &self.pairs {
            let (ea, eb) = (idx.event(a), idx.event(b));
            let line = PairLine {
                e1: a + 1,
                e2: b + 1,
                thread1: trace.thread_name(ea.thread),
                thread2: trace.thread_name(eb.thread),
                var: ea.op.var().map_or("", |x| trace.var_name(x)),
                loc1: ea.loc,
                loc2: eb.loc,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        let summary = SummaryLine {
            pairs: self.pairs.len(),
            racy_events: self.racy_events.len(),
            racy_locations: self.racy_locations.len(),
            racy_variables: self.racy_variables.len(),
        };
        serde_json::to_writer(&mut out, &summary)?;
        out.write_all(b"\n")
    }
}

#[derive(Serialize)]
struct PairLine<'a> {
    e1: usize,
    e2: usize,
    thread1: &'a str,
    thread2: &'a str,
    var: &'a str,
    loc1: u32,
    loc2: u32,
}

#[derive(Serialize)]
struct SummaryLine {
    pairs: usize,
    racy_events: usize,
    racy_locations: usize,
    racy_variables: usize,
}

/// Distinct count of `pairs` under `mode`.
pub fn aggregate(idx: &TraceIndex, pairs: &[(EventId, EventId)], mode: Mode) -> usize {
    RaceReport::new(idx, pairs.to_vec(), Vec::new()).count(mode)
}
