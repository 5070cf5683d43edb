use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use soc_lander_ffi::*;

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { sl_string_free(p) };
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(sl_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn numerics_match_the_library() {
    let mut out = 0.0;
    assert_eq!(unsafe { sl_kalman_gain(1.0, 3.0, &mut out) }, SlStatus::Ok);
    assert_eq!(out, 0.25);

    let a = [0.2, 0.8];
    let b = [0.6, 0.4];
    let mut post = [0.0; 2];
    assert_eq!(unsafe { sl_belief_update(a.as_ptr(), b.as_ptr(), 2, 0.5, post.as_mut_ptr()) }, SlStatus::Ok);
    assert!((post[0] - 0.4).abs() < 1e-12 && (post[1] - 0.6).abs() < 1e-12);
    assert_eq!(
        unsafe { sl_belief_update(a.as_ptr(), b.as_ptr(), 2, 1.5, post.as_mut_ptr()) },
        SlStatus::OutOfRange
    );
    let bad = [0.5, 0.7];
    assert_eq!(
        unsafe { sl_belief_update(bad.as_ptr(), b.as_ptr(), 2, 0.5, post.as_mut_ptr()) },
        SlStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());

    let p = [0.25; 4];
    assert_eq!(unsafe { sl_free_energy(p.as_ptr(), p.as_ptr(), 4, &mut out) }, SlStatus::Ok);
    assert!((out - 4f64.ln()).abs() < 1e-12);

    let e = [1.0, -1.0];
    assert_eq!(unsafe { sl_precision(e.as_ptr(), 2, &mut out) }, SlStatus::Ok);
    assert_eq!(out, 0.0);
    assert_eq!(unsafe { sl_precision(e.as_ptr(), 1, &mut out) }, SlStatus::InvalidArgument);
    assert_eq!(unsafe { sl_precision(ptr::null(), 2, &mut out) }, SlStatus::NullPointer);
}

#[test]
fn episode_handles() {
    let level = CString::new("b").unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { sl_run_episode(level.as_ptr(), 0.5, 0.5, true, 0, &mut t) }, SlStatus::Ok);
    let n = unsafe { sl_trace_len(t) };
    assert!(n > 400);
    let mut r = SlRecord { step: 0, x: 0.0, y: 0.0, input: 0, ll_soc: 0.0, hl_soc: 0.0, trigger: false, crashed: false };
    assert_eq!(unsafe { sl_trace_record(t, 0, &mut r) }, SlStatus::Ok);
    assert_eq!(r.step, 0);
    assert!(r.hl_soc.is_finite());
    assert_eq!(unsafe { sl_trace_record(t, n, &mut r) }, SlStatus::OutOfRange);
    let csv = take_string(unsafe { sl_trace_to_csv(t) });
    assert_eq!(csv.lines().count(), n + 1);
    let meta = take_string(unsafe { sl_trace_meta(t) });
    assert!(meta.contains("level=b"));
    unsafe { sl_trace_free(t) };

    let mut t = ptr::null_mut();
    assert_eq!(unsafe { sl_run_episode(level.as_ptr(), -1.0, 0.5, false, 0, &mut t) }, SlStatus::Ok);
    assert_eq!(unsafe { sl_trace_record(t, 0, &mut r) }, SlStatus::Ok);
    assert!(r.hl_soc.is_nan());
    unsafe { sl_trace_free(t) };

    let missing = CString::new("zz").unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { sl_run_episode(missing.as_ptr(), 0.5, 0.5, true, 0, &mut t) }, SlStatus::UnknownLevel);
    assert!(t.is_null());
    assert_eq!(unsafe { sl_run_episode(level.as_ptr(), 2.0, 0.5, true, 0, &mut t) }, SlStatus::InvalidArgument);
    assert_eq!(unsafe { sl_trace_len(ptr::null()) }, 0);
    unsafe { sl_trace_free(ptr::null_mut()) };
}

#[test]
fn connection_round_trip() {
    let c = sl_connection_new();
    let send = |line: &str| {
        let l = CString::new(line).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { sl_connection_send(c, l.as_ptr(), &mut out) }, SlStatus::Ok);
        take_string(out)
    };
    assert_eq!(send(r#"{"type":"hello","proto":1}"#), "{\"type\":\"hello\",\"proto\":1}\n");
    assert!(send(r#"{"type":"create","level":"a","mode":"human","seed":5}"#).starts_with("{\"type\":\"frame\""));
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { sl_connection_export_csv(c, &mut out) }, SlStatus::InvalidArgument);
    for _ in 0..10 {
        assert_eq!(send(r#"{"type":"input","dir":"left"}"#), "");
        assert_eq!(unsafe { sl_connection_tick(c, &mut out) }, SlStatus::Ok);
        assert!(take_string(out).contains("\"probe\":false"));
    }
    assert!(send(r#"{"type":"end"}"#).contains("aborted"));
    assert_eq!(unsafe { sl_connection_export_csv(c, &mut out) }, SlStatus::Ok);
    let csv = take_string(out);
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.lines().nth(1).unwrap().contains(",left,"));
    unsafe { sl_connection_free(c) };
}

#[test]
fn header_is_generated() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/soc_lander.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["sl_run_episode", "sl_trace_record", "sl_string_free", "SL_STATUS_OK", "typedef struct SlTrace SlTrace"] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C program against the static library when a C
/// compiler is available.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libsoc_lander_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
