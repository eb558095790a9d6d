//! Small hand-written traces with known verdicts, shared by unit tests,
//! integration tests and the acceptance suite. Event numbers in the comments
//! are 1-based, as on the command line.

use crate::trace::Trace;

const CRITICAL_SECTION_REVERSAL: &str = include_str!("../tests/fixtures/critical_section_reversal.trace");
const REORDERED_PREFIX: &str = include_str!("../tests/fixtures/reordered_prefix.trace");
const CYCLIC_REORDERING: &str = include_str!("../tests/fixtures/cyclic_reordering.trace");
const DOUBLE_OPEN_ACQUIRE: &str = include_str!("../tests/fixtures/double_open_acquire.trace");
const MEMORY_ORDER_REVERSAL: &str = include_str!("../tests/fixtures/memory_order_reversal.trace");

fn parse(text: &str) -> Trace {
    Trace::parse(text).expect("fixture parses")
}

/// 12 events, 4 threads. (1,12) is a race whose witness runs t3's critical
/// section on `l` before t2's.
pub fn critical_section_reversal() -> Trace {
    parse(CRITICAL_SECTION_REVERSAL)
}

/// 6 events, 2 threads. (1,5) is a race witnessed by the single event 4.
pub fn reordered_prefix() -> Trace {
    parse(REORDERED_PREFIX)
}

/// 9 events, 2 threads. (4,9) is not a race.
pub fn cyclic_reordering() -> Trace {
    parse(CYCLIC_REORDERING)
}

/// 21 events, 5 threads. (1,21) is lock-infeasible for the optimistic closure.
pub fn double_open_acquire() -> Trace {
    parse(DOUBLE_OPEN_ACQUIRE)
}

/// 19 events, 2 threads. (10,19) is predictable but not optimistic.
pub fn memory_order_reversal() -> Trace {
    parse(MEMORY_ORDER_REVERSAL)
}

/// All fixtures with a short name.
pub fn all() -> Vec<(&'static str, Trace)> {
    vec![
        ("critical_section_reversal", critical_section_reversal()),
        ("reordered_prefix", reordered_prefix()),
        ("cyclic_reordering", cyclic_reordering()),
        ("double_open_acquire", double_open_acquire()),
        ("memory_order_reversal", memory_order_reversal()),
    ]
}
