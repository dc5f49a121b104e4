//! C ABI over the `drivestyle` library.
//!
//! Segment collections live behind the opaque [`DsSegments`] handle, which
//! the caller releases with [`ds_segments_free`]. Every fallible function
//! returns a [`DsStatus`]; on failure [`ds_last_error_message`] describes
//! the most recent error on the calling thread. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use drivestyle::features::{extract, FEATURE_COUNT};
use drivestyle::gaussfit::fit_two_gaussians;
use drivestyle::learners::auc;
use drivestyle::rules::{classify_braking, BrakeThresholds, Severity};
use drivestyle::sensor::{load_segments, Label, ManeuverKind, SensorSegment};
use drivestyle::synth::generate_corpus;
use drivestyle::Error;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input data failed validation.
    Validation = 3,
    Io = 4,
    IndexOutOfRange = 5,
    BufferTooSmall = 6,
    /// The computation finished but did not converge; outputs are set.
    NotConverged = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsSeverity {
    VerySafe = 0,
    Safe = 1,
    Dangerous = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsLabel {
    Safe = 0,
    Dangerous = 1,
    Unlabeled = 2,
}

/// Opaque collection of validated sensor segments.
pub struct DsSegments {
    segments: Vec<SensorSegment>,
}

/// Number of values written by [`ds_features_extract`].
pub const DS_FEATURE_COUNT: usize = 22;
const _: () = assert!(DS_FEATURE_COUNT == FEATURE_COUNT);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NULs removed"));
}

fn fail(status: DsStatus, msg: impl Into<String>) -> DsStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> DsStatus {
    let status = if e.exit_code() == 4 { DsStatus::Io } else { DsStatus::Validation };
    fail(status, format!("[{}] {e}", e.code()))
}

fn guard(f: impl FnOnce() -> DsStatus) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == DsStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(DsStatus::Panic, "internal panic"),
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, DsStatus> {
    if p.is_null() {
        return Err(fail(DsStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DsStatus::InvalidArgument, "string argument is not UTF-8"))
}

unsafe fn segment_at<'a>(handle: *const DsSegments, index: usize) -> Result<&'a SensorSegment, DsStatus> {
    let Some(h) = handle.as_ref() else {
        return Err(fail(DsStatus::NullPointer, "null segments handle"));
    };
    h.segments.get(index).ok_or_else(|| {
        fail(
            DsStatus::IndexOutOfRange,
            format!("index {index} out of range for {} segments", h.segments.len()),
        )
    })
}

fn publish(segments: Vec<SensorSegment>, out: *mut *mut DsSegments) {
    // SAFETY: callers checked `out` for null.
    unsafe { *out = Box::into_raw(Box::new(DsSegments { segments })) };
}

/// Load a segment CSV file. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_segments_load_csv(path: *const c_char, out: *mut *mut DsSegments) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "null output pointer");
        }
        let path = match c_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_segments(path) {
            Ok(segments) => {
                publish(segments, out);
                DsStatus::Ok
            }
            Err(e) => from_error(e.into()),
        }
    })
}

/// Generate a synthetic corpus of `n_per_class` safe and as many dangerous
/// segments. `kind` is one of `turn`, `uturn`, `lane_change`, `brake`,
/// `gas`.
///
/// # Safety
/// `kind` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_segments_synth(
    kind: *const c_char,
    n_per_class: usize,
    seed: u64,
    out: *mut *mut DsSegments,
) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "null output pointer");
        }
        let kind: ManeuverKind = match c_str(kind).map(str::parse) {
            Ok(Ok(k)) => k,
            Ok(Err(_)) => return fail(DsStatus::InvalidArgument, "unknown maneuver kind"),
            Err(s) => return s,
        };
        if n_per_class == 0 {
            return fail(DsStatus::InvalidArgument, "n_per_class must be at least 1");
        }
        publish(generate_corpus(kind, n_per_class, seed), out);
        DsStatus::Ok
    })
}

/// Number of segments; 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_segments_len(handle: *const DsSegments) -> usize {
    handle.as_ref().map_or(0, |h| h.segments.len())
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `handle` must be null or a live handle not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ds_segments_free(handle: *mut DsSegments) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ds_segment_label(handle: *const DsSegments, index: usize, out: *mut DsLabel) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "null output pointer");
        }
        match segment_at(handle, index) {
            Ok(seg) => {
                *out = match seg.label() {
                    Label::Safe => DsLabel::Safe,
                    Label::Dangerous => DsLabel::Dangerous,
                    Label::Unlabeled => DsLabel::Unlabeled,
                };
                DsStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Write the 22 wavelet features of segment `index` into `out`, which
/// holds `out_len` doubles.
///
/// # Safety
/// `handle` must be a live handle and `out` valid for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn ds_features_extract(
    handle: *const DsSegments,
    index: usize,
    out: *mut f64,
    out_len: usize,
) -> DsStatus {
    guard(|| {
        if out.is_null() {
            return fail(DsStatus::NullPointer, "null output buffer");
        }
        if out_len < FEATURE_COUNT {
            return fail(DsStatus::BufferTooSmall, format!("need {FEATURE_COUNT} doubles, got {out_len}"));
        }
        let seg = match segment_at(handle, index) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match extract(seg) {
            Ok(fv) => {
                ptr::copy_nonoverlapping(fv.values().as_ptr(), out, FEATURE_COUNT);
                DsStatus::Ok
            }
            Err(e) => from_error(e.into()),
        }
    })
}

/// Apply the braking rule to segment `index`. Thresholds are in m/s²;
/// pass 0 for any of them to use the defaults (0.11 g, 0.45 g, 3 s).
///
/// # Safety
/// `handle` must be a live handle; the outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ds_classify_braking(
    handle: *const DsSegments,
    index: usize,
    very_safe: f64,
    dangerous: f64,
    window_s: f64,
    out_delta_a: *mut f64,
    out_severity: *mut DsSeverity,
) -> DsStatus {
    guard(|| {
        if out_delta_a.is_null() || out_severity.is_null() {
            return fail(DsStatus::NullPointer, "null output pointer");
        }
        let seg = match segment_at(handle, index) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let d = BrakeThresholds::default();
        let pick = |v: f64, fallback: f64| if v == 0.0 { fallback } else { v };
        let th = BrakeThresholds {
            very_safe: pick(very_safe, d.very_safe),
            dangerous: pick(dangerous, d.dangerous),
            window_s: pick(window_s, d.window_s),
        };
        match classify_braking(seg, &th) {
            Ok(v) => {
                *out_delta_a = v.delta_a;
                *out_severity = match v.severity {
                    Severity::VerySafe => DsSeverity::VerySafe,
                    Severity::Safe => DsSeverity::Safe,
                    Severity::Dangerous => DsSeverity::Dangerous,
                };
                DsStatus::Ok
            }
            Err(e) => from_error(e.into()),
        }
    })
}

/// Fit two Gaussians to `n` samples. `out_params` receives
/// `a1, b1, c1, a2, b2, c2, rmse` (7 doubles). Returns
/// `DS_STATUS_NOT_CONVERGED` with the best point written if the fit
/// stopped early.
///
/// # Safety
/// `ts` and `ys` must be valid for `n` reads, `out_params` for 7 writes.
#[no_mangle]
pub unsafe extern "C" fn ds_fit_two_gaussians(
    ts: *const f64,
    ys: *const f64,
    n: usize,
    max_iters: usize,
    tol: f64,
    out_params: *mut f64,
) -> DsStatus {
    guard(|| {
        if ts.is_null() || ys.is_null() || out_params.is_null() {
            return fail(DsStatus::NullPointer, "null buffer");
        }
        let ts = std::slice::from_raw_parts(ts, n);
        let ys = std::slice::from_raw_parts(ys, n);
        match fit_two_gaussians(ts, ys, max_iters, tol) {
            Ok(fit) => {
                let p = fit.pair;
                let values = [p.a1, p.b1, p.c1, p.a2, p.b2, p.c2, p.rmse];
                ptr::copy_nonoverlapping(values.as_ptr(), out_params, values.len());
                if fit.converged {
                    DsStatus::Ok
                } else {
                    fail(DsStatus::NotConverged, "fit stopped before convergence")
                }
            }
            Err(e) => from_error(e.into()),
        }
    })
}

/// Area under the ROC curve of `scores` against `positive` flags
/// (nonzero means dangerous), ties counted half.
///
/// # Safety
/// `scores` and `positive` must be valid for `n` reads.
#[no_mangle]
pub unsafe extern "C" fn ds_auc(scores: *const f64, positive: *const u8, n: usize, out: *mut f64) -> DsStatus {
    guard(|| {
        if scores.is_null() || positive.is_null() || out.is_null() {
            return fail(DsStatus::NullPointer, "null buffer");
        }
        let scores = std::slice::from_raw_parts(scores, n);
        let truth: Vec<bool> = std::slice::from_raw_parts(positive, n).iter().map(|&b| b != 0).collect();
        if scores.iter().any(|s| s.is_nan()) {
            return fail(DsStatus::InvalidArgument, "NaN score");
        }
        match auc(scores, &truth) {
            Some(a) => {
                *out = a;
                DsStatus::Ok
            }
            None => fail(DsStatus::InvalidArgument, "both classes must be present"),
        }
    })
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ds_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
