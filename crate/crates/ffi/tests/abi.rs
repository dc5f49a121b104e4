use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use drivestyle_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ds_last_error_message()) }.to_string_lossy().into_owned()
}

fn synth(kind: &str, n: usize, seed: u64) -> *mut DsSegments {
    let kind = CString::new(kind).unwrap();
    let mut handle = ptr::null_mut();
    let status = unsafe { ds_segments_synth(kind.as_ptr(), n, seed, &mut handle) };
    assert_eq!(status, DsStatus::Ok, "{}", last_error());
    handle
}

#[test]
fn synth_features_and_labels() {
    let h = synth("turn", 3, 1);
    unsafe {
        assert_eq!(ds_segments_len(h), 6);
        let mut label = DsLabel::Unlabeled;
        assert_eq!(ds_segment_label(h, 0, &mut label), DsStatus::Ok);
        assert_eq!(label, DsLabel::Safe);
        assert_eq!(ds_segment_label(h, 5, &mut label), DsStatus::Ok);
        assert_eq!(label, DsLabel::Dangerous);

        let mut buf = [0.0f64; DS_FEATURE_COUNT];
        assert_eq!(ds_features_extract(h, 2, buf.as_mut_ptr(), buf.len()), DsStatus::Ok);
        assert!(buf[0] > 2.9, "duration {}", buf[0]);
        assert_eq!(ds_features_extract(h, 2, buf.as_mut_ptr(), 21), DsStatus::BufferTooSmall);
        assert_eq!(ds_features_extract(h, 6, buf.as_mut_ptr(), 22), DsStatus::IndexOutOfRange);
        assert!(last_error().contains("out of range"));
        ds_segments_free(h);
    }
}

#[test]
fn braking_rule_through_handle() {
    let h = synth("brake", 4, 2);
    unsafe {
        for i in 0..8 {
            let mut delta = 0.0;
            let mut sev = DsSeverity::VerySafe;
            assert_eq!(ds_classify_braking(h, i, 0.0, 0.0, 0.0, &mut delta, &mut sev), DsStatus::Ok);
            assert_eq!(sev == DsSeverity::Dangerous, i >= 4, "segment {i}: {delta}");
        }
        ds_segments_free(h);
    }
    let turns = synth("turn", 1, 2);
    unsafe {
        let (mut delta, mut sev) = (0.0, DsSeverity::Safe);
        assert_eq!(
            ds_classify_braking(turns, 0, 0.0, 0.0, 0.0, &mut delta, &mut sev),
            DsStatus::Validation
        );
        assert!(last_error().contains("[rules.WrongKind]"));
        ds_segments_free(turns);
    }
}

#[test]
fn csv_loading_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gas.csv");
    drivestyle::sensor::save_segments(&path, &drivestyle::synth::generate_corpus(
        drivestyle::sensor::ManeuverKind::Gas,
        2,
        9,
    ))
    .unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(ds_segments_load_csv(c_path.as_ptr(), &mut h), DsStatus::Ok);
        assert_eq!(ds_segments_len(h), 4);
        ds_segments_free(h);

        let missing = CString::new(dir.path().join("none.csv").to_str().unwrap()).unwrap();
        let mut h2 = ptr::null_mut();
        assert_eq!(ds_segments_load_csv(missing.as_ptr(), &mut h2), DsStatus::Io);
        assert!(h2.is_null());
        assert_eq!(ds_segments_load_csv(ptr::null(), &mut h2), DsStatus::NullPointer);

        let bogus = CString::new("spin").unwrap();
        assert_eq!(ds_segments_synth(bogus.as_ptr(), 1, 0, &mut h2), DsStatus::InvalidArgument);
        assert_eq!(ds_segments_len(ptr::null()), 0);
        ds_segments_free(ptr::null_mut());
    }
}

#[test]
fn gaussian_fit_and_auc() {
    let ts: Vec<f64> = (0..=800).map(|i| i as f64 / 20.0).collect();
    let ys: Vec<f64> = ts
        .iter()
        .map(|&t| (-(t - 10.0f64).powi(2) / 8.0).exp() + 0.5 * (-(t - 30.0f64).powi(2) / 32.0).exp())
        .collect();
    let mut out = [0.0f64; 7];
    unsafe {
        let status = ds_fit_two_gaussians(ts.as_ptr(), ys.as_ptr(), ts.len(), 200, 1e-10, out.as_mut_ptr());
        assert_eq!(status, DsStatus::Ok);
    }
    for (got, want) in out.iter().zip([1.0, 10.0, 2.0, 0.5, 30.0, 4.0]) {
        assert!(((got - want) / want).abs() < 1e-3);
    }
    unsafe {
        assert_eq!(
            ds_fit_two_gaussians(ts.as_ptr(), ys.as_ptr(), 5, 10, 1e-8, out.as_mut_ptr()),
            DsStatus::Validation
        );
    }

    let scores = [0.1, 0.4, 0.35, 0.8];
    let positive = [0u8, 0, 1, 1];
    let mut a = 0.0;
    unsafe {
        assert_eq!(ds_auc(scores.as_ptr(), positive.as_ptr(), 4, &mut a), DsStatus::Ok);
        assert_eq!(a, 0.75);
        assert_eq!(ds_auc(scores.as_ptr(), [1u8; 4].as_ptr(), 4, &mut a), DsStatus::InvalidArgument);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ds_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/drivestyle.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "ds_segments_load_csv",
        "ds_segments_synth",
        "ds_segments_len",
        "ds_segments_free",
        "ds_features_extract",
        "ds_classify_braking",
        "ds_fit_two_gaussians",
        "ds_auc",
        "ds_last_error_message",
        "ds_version",
        "typedef struct DsSegments DsSegments",
        "DS_STATUS_NOT_CONVERGED = 7",
        "#define DS_FEATURE_COUNT 22",
    ] {
        assert!(text.contains(name), "header lacks `{name}`");
    }
    // a C compiler is optional in the build environment
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
