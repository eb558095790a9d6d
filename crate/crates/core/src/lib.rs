//! Sound prediction of optimistic sync-reversal data races.
//!
//! A pair of conflicting accesses is reported when some reordering of the
//! observed trace can run both of them back to back, where the reordering
//! keeps every conflicting access and every fully executed critical section
//! in its observed order and only leaves a critical section open when
//! finishing it would require one of the two racing events.
//!
//! ```
//! use osr::{detector, Trace, TraceIndex};
//!
//! let trace = Trace::parse("t1|w(x)\nt1|acq(l)\nt1|rel(l)\nt2|acq(l)\nt2|r(x)\nt2|rel(l)").unwrap();
//! let idx = TraceIndex::new(trace).unwrap();
//! let report = detector::detect(&idx, &detector::DetectOptions::default());
//! assert_eq!(report.pairs, vec![(0, 4)]);
//! ```

pub mod abs_graph;
pub mod closure;
pub mod detector;
pub mod fixtures;
pub mod gen;
pub mod index;
pub mod opt_graph;
pub mod oracle;
pub mod report;
pub mod rmq;
pub mod trace;

pub use closure::{closure, ClosureResult, Frontier};
pub use index::{Pos, TraceIndex};
pub use trace::{Event, EventId, LockId, Op, ThreadId, Trace, VarId};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] trace::ParseError),
    #[error("ill-formed trace: {0}")]
    IllFormed(trace::WellFormedReport),
    #[error("event {index} is out of range (trace has {len} events)")]
    EventOutOfRange { index: usize, len: usize },
    #[error("events {0} and {1} are not a conflicting pair")]
    NotConflicting(usize, usize),
    #[error("invalid vector instance: {0}")]
    OvFormat(String),
}
