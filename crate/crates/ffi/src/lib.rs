//! C ABI over the `oee` engine.
//!
//! Every fallible function returns an [`OeeStatus`] and writes its result
//! through an out pointer. Handles are opaque and must be released with the
//! matching `*_free` function; strings returned to the caller are released
//! with [`oee_string_free`]. The message of the most recent failure on the
//! calling thread is available from [`oee_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use oee::formula::{parse, Formula};
use oee::harness::{run, Scenario, Trace};
use oee::multiagent::{EventFile, FrameFile};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OeeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Config = 4,
    Domain = 5,
    Panic = 6,
}

/// A parsed formula.
pub struct OeeFormula(Formula);

/// A validated scenario.
pub struct OeeScenario(Scenario);

/// The event trace of one run.
pub struct OeeTrace(Trace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(OeeStatus, String);

fn fail<E: std::fmt::Display>(status: OeeStatus) -> impl FnOnce(E) -> Failure {
    move |e| Failure(status, e.to_string())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> OeeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => OeeStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OeeStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure(OeeStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(OeeStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(OeeStatus::NullArgument, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(OeeStatus::NullArgument, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(fail(OeeStatus::Domain))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Failure> {
    h.as_ref()
        .ok_or_else(|| Failure(OeeStatus::NullArgument, format!("{what} is null")))
}

/// Message of the last failure on this thread, or NULL if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn oee_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oee_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `text` into a new formula handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oee_formula_parse(text: *const c_char, out: *mut *mut OeeFormula) -> OeeStatus {
    guard(|| {
        let text = read_str(text, "text")?;
        let f = parse(text).map_err(fail(OeeStatus::Parse))?;
        write_out(out, OeeFormula(f))
    })
}

/// Canonical rendering of a formula.
///
/// # Safety
/// `formula` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oee_formula_render(formula: *const OeeFormula, out: *mut *mut c_char) -> OeeStatus {
    guard(|| write_string(out, handle(formula, "formula")?.0.render()))
}

/// Modal depth of a formula.
///
/// # Safety
/// `formula` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oee_formula_depth(formula: *const OeeFormula, out: *mut u32) -> OeeStatus {
    guard(|| {
        let f = handle(formula, "formula")?;
        if out.is_null() {
            return Err(Failure(OeeStatus::NullArgument, "output pointer is null".into()));
        }
        *out = f.0.depth() as u32;
        Ok(())
    })
}

/// # Safety
/// `formula` must be NULL or a handle from [`oee_formula_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oee_formula_free(formula: *mut OeeFormula) {
    if !formula.is_null() {
        drop(Box::from_raw(formula));
    }
}

/// Validates a scenario given as JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oee_scenario_from_json(json: *const c_char, out: *mut *mut OeeScenario) -> OeeStatus {
    guard(|| {
        let s = Scenario::from_json(read_str(json, "json")?).map_err(fail(OeeStatus::Config))?;
        write_out(out, OeeScenario(s))
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from [`oee_scenario_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oee_scenario_free(scenario: *mut OeeScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs one replicate of a scenario.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oee_run(scenario: *const OeeScenario, replicate: u64, out: *mut *mut OeeTrace) -> OeeStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let trace = run(&s.0, replicate).map_err(fail(OeeStatus::Config))?;
        write_out(out, OeeTrace(trace))
    })
}

/// Number of events in a trace.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oee_trace_len(trace: *const OeeTrace, out: *mut usize) -> OeeStatus {
    guard(|| {
        let t = handle(trace, "trace")?;
        if out.is_null() {
            return Err(Failure(OeeStatus::NullArgument, "output pointer is null".into()));
        }
        *out = t.0.events.len();
        Ok(())
    })
}

/// The trace as JSONL, one event per line.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oee_trace_to_jsonl(trace: *const OeeTrace, out: *mut *mut c_char) -> OeeStatus {
    guard(|| write_string(out, handle(trace, "trace")?.0.to_jsonl()))
}

/// # Safety
/// `trace` must be NULL or a handle from [`oee_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oee_trace_free(trace: *mut OeeTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Common knowledge of `formula` at the state `at` (a bit string) of the
/// frame described by `frame_json`. Writes a JSON object with an `outcome`
/// of `holds`, `fails_at` or `infeasible`.
///
/// # Safety
/// All string arguments must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oee_check(
    frame_json: *const c_char,
    formula: *const c_char,
    at: *const c_char,
    out: *mut *mut c_char,
) -> OeeStatus {
    guard(|| {
        let file: FrameFile = serde_json::from_str(read_str(frame_json, "frame_json")?).map_err(fail(OeeStatus::Config))?;
        let frame = file.to_frame().map_err(fail(OeeStatus::Config))?;
        let f = parse(read_str(formula, "formula")?).map_err(fail(OeeStatus::Parse))?;
        let at = file.state(read_str(at, "at")?).map_err(fail(OeeStatus::Domain))?;
        let outcome = frame.common_knowledge(&f, &at).map_err(fail(OeeStatus::Domain))?;
        write_string(out, outcome.to_json().to_string())
    })
}

/// Agreement report for the event in `event_json` over the frame in
/// `frame_json`, as JSON.
///
/// # Safety
/// All string arguments must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn oee_agree(frame_json: *const c_char, event_json: *const c_char, out: *mut *mut c_char) -> OeeStatus {
    guard(|| {
        let file: FrameFile = serde_json::from_str(read_str(frame_json, "frame_json")?).map_err(fail(OeeStatus::Config))?;
        let event: EventFile = serde_json::from_str(read_str(event_json, "event_json")?).map_err(fail(OeeStatus::Config))?;
        let frame = file.to_frame().map_err(fail(OeeStatus::Config))?;
        let at = file.state(&event.at).map_err(fail(OeeStatus::Domain))?;
        let json = match event.resolve(&file, &frame).map_err(fail(OeeStatus::Config))? {
            Err(missing) => serde_json::json!({"outcome": "infeasible", "missing": missing}),
            Ok(e) => {
                let report = frame.agreement_check(&e, &at).map_err(fail(OeeStatus::Domain))?;
                serde_json::json!({"outcome": "report", "report": report})
            }
        };
        write_string(out, json.to_string())
    })
}
