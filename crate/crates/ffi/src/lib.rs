//! C ABI for the shared-memory transactional laboratory.
//!
//! The surface is deliberately narrow: opaque handles for parsed traces,
//! property checks that return JSON reports, and one-shot experiment
//! runners (adversarial read chains, the TM-backed lock). Strings cross
//! the boundary as NUL-terminated UTF-8; every `char*` this library hands
//! out must be released with [`tmlab_string_free`].
//!
//! Every function returns a [`TmlabStatus`]:
//!
//! - `Ok` (0) — the operation ran and the property (if any) holds.
//! - `Violation` (1) — the property was checked and does not hold; the
//!   JSON report names the witnesses.
//! - `Refused` (2) — the input exceeded an exhaustive-search bound or a
//!   step/state budget.
//! - `InvalidArgument` (3) — null pointers, malformed UTF-8/JSON, unknown
//!   property or TM names, or parameters out of range.
//! - `Internal` (4) — a panic was caught at the boundary; a bug.
//!
//! Panics never unwind across the boundary: all entry points catch them.

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tmlab::check::dap::check_weak_dap;
use tmlab::check::invisible::{check_invisible_reads, ReadVisibilityScope};
use tmlab::check::progress::{
    check_progressiveness, check_strong_progressiveness, DEFAULT_STRONG_BOUND,
};
use tmlab::check::serialize::{check_opacity, check_strict_serializability, DEFAULT_TXN_BOUND};
use tmlab::lowerbound::{measure_final_read_footprint, measure_read_validation_cost, ChainError};
use tmlab::mutex::{explore_mutual_exclusion, run_mutex_experiment};
use tmlab::sim::event::Execution;
use tmlab::sim::schedule::Schedule;
use tmlab::stm::{OccTm, SingleObjectTm};
use tmlab::tm::history::{derive_history, History};
use tmlab::ProcessId;

/// Result of every call across this ABI.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TmlabStatus {
    Ok = 0,
    Violation = 1,
    Refused = 2,
    InvalidArgument = 3,
    Internal = 4,
}

/// A parsed transactional history (opaque).
pub struct TmlabHistory {
    inner: History,
}

/// A parsed execution log (opaque).
pub struct TmlabExecution {
    inner: Execution,
}

/// The library version as a static NUL-terminated string. Do not free.
#[no_mangle]
pub extern "C" fn tmlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Release a string returned by any function of this library.
///
/// # Safety
/// `s` must be a pointer previously returned through a `char **out`
/// parameter of this library (or null, which is ignored), and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tmlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn give_string(out: *mut *mut c_char, s: String) {
    if out.is_null() {
        return;
    }
    let c = CString::new(s).unwrap_or_else(|_| CString::new("<interior NUL>").unwrap());
    unsafe { *out = c.into_raw() };
}

fn take_str<'a>(p: *const c_char) -> Option<&'a str> {
    if p.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(p) }.to_str().ok()
}

/// Runs `f` with panics caught; a panic reports `Internal`.
fn guarded<F: FnOnce() -> TmlabStatus>(f: F) -> TmlabStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(TmlabStatus::Internal)
}

fn error_json(message: impl AsRef<str>) -> String {
    serde_json::json!({ "error": message.as_ref() }).to_string()
}

/// Parse a history from JSON: either an array of operation records
/// `{txn, kind, object, arg, outcome, invSeq, respSeq}` or an object
/// `{"initial": {...}, "events": [...]}` that also sets initial t-object
/// values. On success `*out` owns the handle; free it with
/// [`tmlab_history_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tmlab_history_parse(
    json: *const c_char,
    out: *mut *mut TmlabHistory,
) -> TmlabStatus {
    if out.is_null() {
        return TmlabStatus::InvalidArgument;
    }
    unsafe { *out = ptr::null_mut() };
    let Some(text) = take_str(json) else {
        return TmlabStatus::InvalidArgument;
    };
    guarded(|| {
        let Ok(value) = serde_json::from_str::<serde_json::Value>(text) else {
            return TmlabStatus::InvalidArgument;
        };
        let (initial, rows) = match &value {
            serde_json::Value::Object(map) if map.contains_key("events") => {
                let initial = match map.get("initial") {
                    Some(v) => match serde_json::from_value(v.clone()) {
                        Ok(i) => i,
                        Err(_) => return TmlabStatus::InvalidArgument,
                    },
                    None => Default::default(),
                };
                (initial, map["events"].clone())
            }
            _ => (Default::default(), value),
        };
        match History::import_json(&rows, initial) {
            Ok(h) => {
                unsafe { *out = Box::into_raw(Box::new(TmlabHistory { inner: h })) };
                TmlabStatus::Ok
            }
            Err(_) => TmlabStatus::InvalidArgument,
        }
    })
}

/// Release a history handle.
///
/// # Safety
/// `h` must come from [`tmlab_history_parse`] (or be null) and must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tmlab_history_free(h: *mut TmlabHistory) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Number of transactions in the history; 0 for null.
///
/// # Safety
/// `h` must be a live handle from [`tmlab_history_parse`] or null.
#[no_mangle]
pub unsafe extern "C" fn tmlab_history_txn_count(h: *const TmlabHistory) -> usize {
    match unsafe { h.as_ref() } {
        Some(h) => h.inner.txns().len(),
        None => 0,
    }
}

/// Parse an execution log from JSONL (one event per line). On success
/// `*out` owns the handle; free it with [`tmlab_execution_free`].
///
/// # Safety
/// `jsonl` must be a valid NUL-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn tmlab_execution_parse(
    jsonl: *const c_char,
    out: *mut *mut TmlabExecution,
) -> TmlabStatus {
    if out.is_null() {
        return TmlabStatus::InvalidArgument;
    }
    unsafe { *out = ptr::null_mut() };
    let Some(text) = take_str(jsonl) else {
        return TmlabStatus::InvalidArgument;
    };
    guarded(|| match Execution::read_jsonl(text.as_bytes()) {
        Ok(e) => {
            unsafe { *out = Box::into_raw(Box::new(TmlabExecution { inner: e })) };
            TmlabStatus::Ok
        }
        Err(_) => TmlabStatus::InvalidArgument,
    })
}

/// Release an execution handle.
///
/// # Safety
/// `e` must come from [`tmlab_execution_parse`] (or be null) and must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tmlab_execution_free(e: *mut TmlabExecution) {
    if !e.is_null() {
        drop(unsafe { Box::from_raw(e) });
    }
}

/// Number of events in the execution; 0 for null.
///
/// # Safety
/// `e` must be a live handle from [`tmlab_execution_parse`] or null.
#[no_mangle]
pub unsafe extern "C" fn tmlab_execution_event_count(e: *const TmlabExecution) -> usize {
    match unsafe { e.as_ref() } {
        Some(e) => e.inner.events.len(),
        None => 0,
    }
}

fn check_on_history(
    h: &History,
    property: &str,
    bound: usize,
    out: *mut *mut c_char,
) -> TmlabStatus {
    let report = |pass: bool, body: serde_json::Value| -> String {
        serde_json::json!({ "property": property, "pass": pass, "report": body }).to_string()
    };
    match property {
        "opacity" | "strict-ser" => {
            let bound = if bound == 0 { DEFAULT_TXN_BOUND } else { bound };
            let result = if property == "opacity" {
                check_opacity(h, bound)
            } else {
                check_strict_serializability(h, bound)
            };
            match result {
                Err(b) => {
                    give_string(out, error_json(b.to_string()));
                    TmlabStatus::Refused
                }
                Ok(Some(witness)) => {
                    give_string(out, report(true, serde_json::to_value(&witness).unwrap()));
                    TmlabStatus::Ok
                }
                Ok(None) => {
                    give_string(
                        out,
                        report(
                            false,
                            serde_json::json!("no serialization of the transactions is legal"),
                        ),
                    );
                    TmlabStatus::Violation
                }
            }
        }
        "prog" => {
            let r = check_progressiveness(h);
            let pass = r.ok();
            give_string(out, report(pass, serde_json::to_value(&r).unwrap()));
            if pass {
                TmlabStatus::Ok
            } else {
                TmlabStatus::Violation
            }
        }
        "strong-prog" => {
            let bound = if bound == 0 {
                DEFAULT_STRONG_BOUND
            } else {
                bound
            };
            match check_strong_progressiveness(h, bound) {
                Err(b) => {
                    give_string(out, error_json(b.to_string()));
                    TmlabStatus::Refused
                }
                Ok(r) => {
                    let pass = r.ok();
                    give_string(out, report(pass, serde_json::to_value(&r).unwrap()));
                    if pass {
                        TmlabStatus::Ok
                    } else {
                        TmlabStatus::Violation
                    }
                }
            }
        }
        _ => {
            give_string(
                out,
                error_json(format!(
                    "property {property:?} is not checkable on a bare history \
                     (expected opacity, strict-ser, prog, or strong-prog)"
                )),
            );
            TmlabStatus::InvalidArgument
        }
    }
}

/// Check a property of a parsed history. `property` is one of `opacity`,
/// `strict-ser`, `prog`, `strong-prog`; `bound` caps the exhaustive
/// searches (0 = default). `*out_json` receives the JSON report.
///
/// # Safety
/// `h` must be a live handle, `property` a valid NUL-terminated string,
/// and `out_json` a valid pointer (or null to discard the report).
#[no_mangle]
pub unsafe extern "C" fn tmlab_check_history(
    h: *const TmlabHistory,
    property: *const c_char,
    bound: usize,
    out_json: *mut *mut c_char,
) -> TmlabStatus {
    if !out_json.is_null() {
        unsafe { *out_json = ptr::null_mut() };
    }
    let (Some(h), Some(property)) = (unsafe { h.as_ref() }, take_str(property)) else {
        return TmlabStatus::InvalidArgument;
    };
    guarded(|| check_on_history(&h.inner, property, bound, out_json))
}

/// Check a property of a parsed execution log. Supports every history
/// property (the history is derived first) plus the access-level ones:
/// `weak-dap` and `inv-reads`.
///
/// # Safety
/// `e` must be a live handle, `property` a valid NUL-terminated string,
/// and `out_json` a valid pointer (or null to discard the report).
#[no_mangle]
pub unsafe extern "C" fn tmlab_check_execution(
    e: *const TmlabExecution,
    property: *const c_char,
    bound: usize,
    out_json: *mut *mut c_char,
) -> TmlabStatus {
    if !out_json.is_null() {
        unsafe { *out_json = ptr::null_mut() };
    }
    let (Some(e), Some(property)) = (unsafe { e.as_ref() }, take_str(property)) else {
        return TmlabStatus::InvalidArgument;
    };
    guarded(|| {
        let execution = &e.inner;
        let report = |pass: bool, body: serde_json::Value| -> String {
            serde_json::json!({ "property": property, "pass": pass, "report": body }).to_string()
        };
        match property {
            "weak-dap" => match check_weak_dap(execution) {
                Err(err) => {
                    give_string(out_json, error_json(err.to_string()));
                    TmlabStatus::InvalidArgument
                }
                Ok(r) => {
                    let violations: Vec<_> = r.violations().cloned().collect();
                    let pass = violations.is_empty();
                    give_string(
                        out_json,
                        report(pass, serde_json::to_value(&violations).unwrap()),
                    );
                    if pass {
                        TmlabStatus::Ok
                    } else {
                        TmlabStatus::Violation
                    }
                }
            },
            "inv-reads" => match check_invisible_reads(execution, ReadVisibilityScope::Strong) {
                Err(err) => {
                    give_string(out_json, error_json(err.to_string()));
                    TmlabStatus::InvalidArgument
                }
                Ok(r) => {
                    let pass = r.violations.is_empty();
                    give_string(out_json, report(pass, serde_json::to_value(&r).unwrap()));
                    if pass {
                        TmlabStatus::Ok
                    } else {
                        TmlabStatus::Violation
                    }
                }
            },
            _ => match derive_history(execution) {
                Err(err) => {
                    give_string(out_json, error_json(err.to_string()));
                    TmlabStatus::InvalidArgument
                }
                Ok(h) => check_on_history(&h, property, bound, out_json),
            },
        }
    })
}

fn chain_status(e: &ChainError) -> TmlabStatus {
    match e {
        ChainError::BadParams(_) => TmlabStatus::InvalidArgument,
        _ => TmlabStatus::Refused,
    }
}

fn run_lowerbound(tm: &str, m: usize, quadratic: bool, out_json: *mut *mut c_char) -> TmlabStatus {
    macro_rules! go {
        ($tm:ty) => {
            if quadratic {
                match measure_read_validation_cost::<$tm>(m) {
                    Ok(r) => (serde_json::to_value(&r).unwrap(), r.pass),
                    Err(e) => {
                        give_string(out_json, error_json(e.to_string()));
                        return chain_status(&e);
                    }
                }
            } else {
                match measure_final_read_footprint::<$tm>(m) {
                    Ok(r) => (serde_json::to_value(&r).unwrap(), r.pass),
                    Err(e) => {
                        give_string(out_json, error_json(e.to_string()));
                        return chain_status(&e);
                    }
                }
            }
        };
    }
    let (value, pass) = match tm {
        "ref" | "occ" => go!(OccTm),
        "sp1" | "single" => go!(SingleObjectTm),
        other => {
            give_string(out_json, error_json(format!("unknown TM {other:?}")));
            return TmlabStatus::InvalidArgument;
        }
    };
    give_string(out_json, value.to_string());
    if pass {
        TmlabStatus::Ok
    } else {
        TmlabStatus::Violation
    }
}

/// Measure per-read step counts across growing fresh read chains driven
/// against the named TM (`"ref"` or `"sp1"`); `m` is the chain length.
/// `*out_json` receives the cost report.
///
/// # Safety
/// `tm` must be a valid NUL-terminated string and `out_json` a valid
/// pointer (or null to discard the report).
#[no_mangle]
pub unsafe extern "C" fn tmlab_lowerbound_quadratic(
    tm: *const c_char,
    m: usize,
    out_json: *mut *mut c_char,
) -> TmlabStatus {
    if !out_json.is_null() {
        unsafe { *out_json = ptr::null_mut() };
    }
    let Some(tm) = take_str(tm) else {
        return TmlabStatus::InvalidArgument;
    };
    guarded(|| run_lowerbound(tm, m, true, out_json))
}

/// Measure the distinct base objects under the final read of invalidated
/// read chains driven against the named TM.
///
/// # Safety
/// `tm` must be a valid NUL-terminated string and `out_json` a valid
/// pointer (or null to discard the report).
#[no_mangle]
pub unsafe extern "C" fn tmlab_lowerbound_space(
    tm: *const c_char,
    m: usize,
    out_json: *mut *mut c_char,
) -> TmlabStatus {
    if !out_json.is_null() {
        unsafe { *out_json = ptr::null_mut() };
    }
    let Some(tm) = take_str(tm) else {
        return TmlabStatus::InvalidArgument;
    };
    guarded(|| run_lowerbound(tm, m, false, out_json))
}

/// Run the TM-backed lock: `n` processes × `passes` passages under a
/// round-robin schedule, with at most `max_steps` steps (0 = a generous
/// default). `*out_json` receives the per-passage RMR report.
///
/// # Safety
/// `out_json` must be a valid pointer (or null to discard the report).
#[no_mangle]
pub unsafe extern "C" fn tmlab_mutex_run(
    n: u32,
    passes: u32,
    max_steps: u64,
    out_json: *mut *mut c_char,
) -> TmlabStatus {
    if !out_json.is_null() {
        unsafe { *out_json = ptr::null_mut() };
    }
    if n == 0 {
        return TmlabStatus::InvalidArgument;
    }
    guarded(|| {
        let max_steps = if max_steps == 0 { 1_000_000 } else { max_steps };
        let schedule = Schedule::RoundRobin {
            procs: (0..n).map(ProcessId).collect(),
        };
        match run_mutex_experiment(n, passes, &schedule, max_steps) {
            Err(e) => {
                give_string(out_json, error_json(e.to_string()));
                TmlabStatus::Refused
            }
            Ok(report) => {
                let complete = (0..n)
                    .all(|i| report.completed.get(&ProcessId(i)).copied().unwrap_or(0) == passes);
                give_string(out_json, serde_json::to_value(&report).unwrap().to_string());
                if !report.safety_ok {
                    TmlabStatus::Violation
                } else if !complete {
                    TmlabStatus::Refused
                } else {
                    TmlabStatus::Ok
                }
            }
        }
    })
}

/// Model-check mutual exclusion of the TM-backed lock over every
/// interleaving of `n` processes × `passes` passages, visiting at most
/// `max_states` states (0 = a generous default). `*out_json` receives
/// either exploration statistics or a counterexample schedule.
///
/// # Safety
/// `out_json` must be a valid pointer (or null to discard the report).
#[no_mangle]
pub unsafe extern "C" fn tmlab_mutex_explore(
    n: u32,
    passes: u32,
    max_states: u64,
    out_json: *mut *mut c_char,
) -> TmlabStatus {
    if !out_json.is_null() {
        unsafe { *out_json = ptr::null_mut() };
    }
    if n == 0 {
        return TmlabStatus::InvalidArgument;
    }
    guarded(|| {
        let max_states = if max_states == 0 {
            10_000_000
        } else {
            max_states
        };
        match explore_mutual_exclusion(n, passes, max_states) {
            Err(overflow) => {
                give_string(out_json, error_json(overflow.to_string()));
                TmlabStatus::Refused
            }
            Ok(Ok(stats)) => {
                give_string(
                    out_json,
                    serde_json::json!({
                        "pass": true,
                        "states": stats.states,
                        "transitions": stats.transitions,
                    })
                    .to_string(),
                );
                TmlabStatus::Ok
            }
            Ok(Err(cx)) => {
                give_string(
                    out_json,
                    serde_json::json!({
                        "pass": false,
                        "schedule": cx.schedule,
                        "events": cx.execution.events.len(),
                    })
                    .to_string(),
                );
                TmlabStatus::Violation
            }
        }
    })
}
