//! C ABI for the soc-lander simulator.
//!
//! Every fallible function returns an [`SlStatus`]; on failure a message is
//! available from [`sl_last_error`] on the same thread. Objects are opaque
//! handles released with their `_free` function. Strings returned by the
//! library must be released with [`sl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use soc_lander::agent::{run_episode, AgentConfig, EpisodeTrace};
use soc_lander::ccl::IntentionLibrary;
use soc_lander::config::Config;
use soc_lander::environment::load_level_arg;
use soc_lander::prob::{self, DiscreteDistribution, Domain};
use soc_lander::scl::KMode;
use soc_lander::session::Connection;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownLevel = 3,
    RunFailed = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// One trace row. Absent SoC values are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SlRecord {
    pub step: u64,
    pub x: f64,
    pub y: f64,
    /// -1 left, 0 none, +1 right.
    pub input: i8,
    pub ll_soc: f64,
    pub hl_soc: f64,
    pub trigger: bool,
    pub crashed: bool,
}

/// A finished episode.
pub struct SlTrace {
    trace: EpisodeTrace,
}

/// A protocol connection driving at most one live session.
pub struct SlConnection {
    conn: Connection,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn fail(status: SlStatus, msg: impl Into<String>) -> SlStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SlStatus) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == SlStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(SlStatus::Panic, "internal panic"),
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize) -> Option<&'a [f64]> {
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, n))
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, SlStatus> {
    if p.is_null() {
        return Err(fail(SlStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SlStatus::InvalidArgument, "string is not UTF-8"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn distribution(p: &[f64]) -> Result<DiscreteDistribution, SlStatus> {
    let domain = Domain::numbered(p.len()).map_err(|e| fail(SlStatus::InvalidArgument, e.to_string()))?;
    DiscreteDistribution::new(domain, p.to_vec()).map_err(|e| fail(SlStatus::InvalidArgument, e.to_string()))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Gain `F / (F + pi)`, 0.5 when both are zero.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn sl_kalman_gain(free_energy: f64, precision: f64, out: *mut f64) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return fail(SlStatus::NullPointer, "out is null");
        }
        *out = prob::kalman_gain(free_energy, precision);
        SlStatus::Ok
    })
}

/// Writes `(1 - gain) * top_down + gain * bottom_up` to `out`. Both inputs
/// must be probability vectors of length `n`.
///
/// # Safety
/// All pointers must reference `n` valid doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_belief_update(
    top_down: *const f64,
    bottom_up: *const f64,
    n: usize,
    gain: f64,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let (Some(a), Some(b)) = (slice(top_down, n), slice(bottom_up, n)) else {
            return fail(SlStatus::NullPointer, "null input");
        };
        if out.is_null() {
            return fail(SlStatus::NullPointer, "out is null");
        }
        let (a, b) = match (distribution(a), distribution(b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match prob::belief_update(&a, &b, gain) {
            Ok(p) => {
                std::slice::from_raw_parts_mut(out, n).copy_from_slice(p.probs());
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::OutOfRange, e.to_string()),
        }
    })
}

/// Entropy of `pred` plus its divergence from `evidence`.
///
/// # Safety
/// Input pointers must reference `n` valid doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_free_energy(
    pred: *const f64,
    evidence: *const f64,
    n: usize,
    out: *mut f64,
) -> SlStatus {
    guard(|| {
        let (Some(p), Some(q)) = (slice(pred, n), slice(evidence, n)) else {
            return fail(SlStatus::NullPointer, "null input");
        };
        if out.is_null() {
            return fail(SlStatus::NullPointer, "out is null");
        }
        let (p, q) = match (distribution(p), distribution(q)) {
            (Ok(p), Ok(q)) => (p, q),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match prob::free_energy(&p, &q) {
            Ok(f) => {
                *out = f;
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Log inverse variance of `n >= 2` prediction errors, clamped.
///
/// # Safety
/// `errors` must reference `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_precision(errors: *const f64, n: usize, out: *mut f64) -> SlStatus {
    guard(|| {
        let Some(e) = slice(errors, n) else {
            return fail(SlStatus::NullPointer, "null input");
        };
        if out.is_null() {
            return fail(SlStatus::NullPointer, "out is null");
        }
        match prob::precision_of_error(e) {
            Ok(pi) => {
                *out = pi;
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Runs one episode. `level` is a builtin id (`a`..`f`) or a level file
/// path. A negative `k` selects the dynamic gain. With `ccl` false the
/// threshold is ignored.
///
/// # Safety
/// `level` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_run_episode(
    level: *const c_char,
    k: f64,
    ccl_threshold: f64,
    ccl: bool,
    seed: u64,
    out: *mut *mut SlTrace,
) -> SlStatus {
    guard(|| {
        if out.is_null() {
            return fail(SlStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let name = match str_arg(level) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let level = match load_level_arg(name) {
            Ok(l) => l,
            Err(e) => return fail(SlStatus::UnknownLevel, e.to_string()),
        };
        let cfg = AgentConfig {
            k_mode: if k < 0.0 { KMode::Dynamic } else { KMode::Fixed(k) },
            ccl_threshold,
            ccl_enabled: ccl,
            seed,
            ..AgentConfig::default()
        };
        if let Err(e) = cfg.validate() {
            return fail(SlStatus::InvalidArgument, e.to_string());
        }
        match run_episode(level, &cfg) {
            Ok(trace) => {
                *out = Box::into_raw(Box::new(SlTrace { trace }));
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::RunFailed, e.to_string()),
        }
    })
}

/// Number of steps in the trace; 0 for null.
///
/// # Safety
/// `t` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn sl_trace_len(t: *const SlTrace) -> usize {
    t.as_ref().map_or(0, |t| t.trace.records.len())
}

/// Whether the episode ended in a crash; false for null.
///
/// # Safety
/// `t` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn sl_trace_crashed(t: *const SlTrace) -> bool {
    t.as_ref().is_some_and(|t| t.trace.crashed())
}

/// Copies row `index` into `out`.
///
/// # Safety
/// `t` must be a live trace handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_trace_record(t: *const SlTrace, index: usize, out: *mut SlRecord) -> SlStatus {
    guard(|| {
        let (Some(t), false) = (t.as_ref(), out.is_null()) else {
            return fail(SlStatus::NullPointer, "null handle or out");
        };
        let Some(r) = t.trace.records.get(index) else {
            return fail(SlStatus::OutOfRange, format!("index {index} beyond {}", t.trace.records.len()));
        };
        *out = SlRecord {
            step: r.step,
            x: r.x,
            y: r.y,
            input: r.input.sign(),
            ll_soc: r.ll_soc.unwrap_or(f64::NAN),
            hl_soc: r.hl_soc.unwrap_or(f64::NAN),
            trigger: r.trigger,
            crashed: r.crashed,
        };
        SlStatus::Ok
    })
}

/// The trace as CSV text; free with [`sl_string_free`]. Null on a null
/// handle.
///
/// # Safety
/// `t` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn sl_trace_to_csv(t: *const SlTrace) -> *mut c_char {
    match t.as_ref() {
        Some(t) => into_c_string(t.trace.to_csv()),
        None => ptr::null_mut(),
    }
}

/// The trace's `key=value` sidecar; free with [`sl_string_free`].
///
/// # Safety
/// `t` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn sl_trace_meta(t: *const SlTrace) -> *mut c_char {
    match t.as_ref() {
        Some(t) => into_c_string(t.trace.meta.to_text()),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `t` must be null or a handle from [`sl_run_episode`], freed once.
#[no_mangle]
pub unsafe extern "C" fn sl_trace_free(t: *mut SlTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// A new in-process protocol connection with default configuration.
#[no_mangle]
pub extern "C" fn sl_connection_new() -> *mut SlConnection {
    let conn = Connection::new(Config::default(), Arc::new(IntentionLibrary::default()), None);
    Box::into_raw(Box::new(SlConnection { conn }))
}

fn lines(msgs: Vec<soc_lander::session::ServerMessage>) -> String {
    msgs.iter().map(|m| m.to_line() + "\n").collect()
}

/// Feeds one client message line. Replies are written to `*out` as
/// newline-terminated JSON lines (possibly empty); free with
/// [`sl_string_free`].
///
/// # Safety
/// `c` must be a live connection, `line` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sl_connection_send(
    c: *mut SlConnection,
    line: *const c_char,
    out: *mut *mut c_char,
) -> SlStatus {
    guard(|| {
        let (Some(c), false) = (c.as_mut(), out.is_null()) else {
            return fail(SlStatus::NullPointer, "null handle or out");
        };
        let line = match str_arg(line) {
            Ok(s) => s,
            Err(s) => return s,
        };
        *out = into_c_string(lines(c.conn.handle_line(line)));
        SlStatus::Ok
    })
}

/// Advances the running session one step, writing replies as in
/// [`sl_connection_send`].
///
/// # Safety
/// `c` must be a live connection and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_connection_tick(c: *mut SlConnection, out: *mut *mut c_char) -> SlStatus {
    guard(|| {
        let (Some(c), false) = (c.as_mut(), out.is_null()) else {
            return fail(SlStatus::NullPointer, "null handle or out");
        };
        *out = into_c_string(lines(c.conn.tick()));
        SlStatus::Ok
    })
}

/// Trace CSV of the connection's finished session.
///
/// # Safety
/// `c` must be a live connection and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_connection_export_csv(c: *const SlConnection, out: *mut *mut c_char) -> SlStatus {
    guard(|| {
        let (Some(c), false) = (c.as_ref(), out.is_null()) else {
            return fail(SlStatus::NullPointer, "null handle or out");
        };
        match c.conn.export() {
            Ok(x) => {
                *out = into_c_string(x.trace.to_csv());
                SlStatus::Ok
            }
            Err(e) => fail(SlStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `c` must be null or a handle from [`sl_connection_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn sl_connection_free(c: *mut SlConnection) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}
