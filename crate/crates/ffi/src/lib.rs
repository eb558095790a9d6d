//! C interface to the `osr` race predictor.
//!
//! Every fallible call returns an [`OsrStatus`]. On failure a message is kept
//! per thread and can be read with [`osr_last_error`]. Event numbers crossing
//! the boundary are 1-based, like the trace format.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use osr::abs_graph::EisTables;
use osr::detector::{check_pair, detect_with, DetectOptions};
use osr::report::{Mode, RaceReport};
use osr::{Error, Trace, TraceIndex};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    IllFormed = 4,
    OutOfRange = 5,
    NotConflicting = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsrMode {
    Events = 0,
    Locations = 1,
    Variables = 2,
}

impl From<OsrMode> for Mode {
    fn from(m: OsrMode) -> Mode {
        match m {
            OsrMode::Events => Mode::Events,
            OsrMode::Locations => Mode::Locations,
            OsrMode::Variables => Mode::Variables,
        }
    }
}

/// A parsed, indexed trace. Opaque to C.
pub struct OsrTrace {
    idx: TraceIndex,
    eis: EisTables,
}

/// Result of [`osr_detect`]. Opaque to C.
pub struct OsrReport {
    inner: RaceReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let msg = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: OsrStatus, msg: impl ToString) -> OsrStatus {
    set_error(msg.to_string());
    status
}

fn from_error(err: Error) -> OsrStatus {
    let status = match err {
        Error::Parse(_) => OsrStatus::Parse,
        Error::IllFormed(_) => OsrStatus::IllFormed,
        Error::EventOutOfRange { .. } => OsrStatus::OutOfRange,
        Error::NotConflicting(..) => OsrStatus::NotConflicting,
        Error::OvFormat(_) => OsrStatus::Parse,
    };
    fail(status, err)
}

fn guard(f: impl FnOnce() -> OsrStatus) -> OsrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        fail(OsrStatus::Panic, msg)
    })
}

/// Message for the most recent failure on this thread, or NULL. The string
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn osr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and indexes a NUL-terminated trace.
///
/// # Safety
/// `text` must be NULL or a valid NUL-terminated string. `out` must be NULL
/// or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn osr_trace_parse(text: *const c_char, out: *mut *mut OsrTrace) -> OsrStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(OsrStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(OsrStatus::InvalidUtf8, "trace is not valid UTF-8");
        };
        let built = Trace::parse(text).map_err(Error::from).and_then(TraceIndex::new);
        match built {
            Ok(idx) => {
                let eis = EisTables::new(&idx);
                *out = Box::into_raw(Box::new(OsrTrace { idx, eis }));
                OsrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `trace` must be NULL or a pointer from [`osr_trace_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn osr_trace_free(trace: *mut OsrTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of events, or 0 for NULL.
///
/// # Safety
/// `trace` must be NULL or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn osr_trace_len(trace: *const OsrTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.idx.len())
}

/// Decides whether events `e1` and `e2` (1-based) race.
///
/// # Safety
/// `trace` must be NULL or a live trace handle. `race` must be NULL or
/// point to a writable `bool`.
#[no_mangle]
pub unsafe extern "C" fn osr_check_pair(
    trace: *const OsrTrace,
    e1: usize,
    e2: usize,
    race: *mut bool,
) -> OsrStatus {
    guard(|| {
        let (Some(t), false) = (trace.as_ref(), race.is_null()) else {
            return fail(OsrStatus::NullPointer, "null argument");
        };
        if e1 == 0 || e2 == 0 {
            let len = t.idx.len();
            return from_error(Error::EventOutOfRange { index: 0, len });
        }
        match check_pair(&t.idx, &t.eis, e1 - 1, e2 - 1, false) {
            Ok(v) => {
                *race = v.race;
                OsrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Runs whole-trace detection. With `all_pairs` every racing pair is kept,
/// otherwise only the first partner per event and thread.
///
/// # Safety
/// `trace` must be NULL or a live trace handle. `out` must be NULL or point
/// to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn osr_detect(
    trace: *const OsrTrace,
    all_pairs: bool,
    out: *mut *mut OsrReport,
) -> OsrStatus {
    guard(|| {
        let (Some(t), false) = (trace.as_ref(), out.is_null()) else {
            return fail(OsrStatus::NullPointer, "null argument");
        };
        let opts = DetectOptions { all_pairs, ..DetectOptions::default() };
        let inner = detect_with(&t.idx, &t.eis, &opts);
        *out = Box::into_raw(Box::new(OsrReport { inner }));
        OsrStatus::Ok
    })
}

/// # Safety
/// `report` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn osr_report_pair_count(report: *const OsrReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.pairs.len())
}

/// Distinct racy events, locations or variables.
///
/// # Safety
/// `report` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn osr_report_count(report: *const OsrReport, mode: OsrMode) -> usize {
    report.as_ref().map_or(0, |r| r.inner.count(mode.into()))
}

/// The `i`-th pair (0-based), as 1-based event numbers, earlier first.
///
/// # Safety
/// `report` must be NULL or a live report handle. `e1` and `e2` must be
/// NULL or point to writable `size_t` storage.
#[no_mangle]
pub unsafe extern "C" fn osr_report_pair(
    report: *const OsrReport,
    i: usize,
    e1: *mut usize,
    e2: *mut usize,
) -> OsrStatus {
    guard(|| {
        let (Some(r), false, false) = (report.as_ref(), e1.is_null(), e2.is_null()) else {
            return fail(OsrStatus::NullPointer, "null argument");
        };
        match r.inner.pairs.get(i) {
            Some(&(a, b)) => {
                *e1 = a + 1;
                *e2 = b + 1;
                OsrStatus::Ok
            }
            None => fail(
                OsrStatus::OutOfRange,
                format!("pair {i} is out of range (report has {} pairs)", r.inner.pairs.len()),
            ),
        }
    })
}

/// # Safety
/// `report` must be NULL or a pointer from [`osr_detect`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn osr_report_free(report: *mut OsrReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
