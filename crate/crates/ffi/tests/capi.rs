//! Exercises the C surface end to end: handle lifecycles, status codes,
//! diagnostics, agreement with the core crate, and — when a C compiler is
//! on the path — an actual C program compiled against the header.

use linkloss::dataset::Normalizer;
use linkloss::features::extract_features;
use linkloss::metrics::fspl;
use linkloss::nn::{forward, init_model, param_count, save_model, ForwardMode, MlpConfig};
use linkloss::profile::{PathProfile, MEAN_EARTH_RADIUS_M};
use linkloss_ffi::*;
use std::ffi::{CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ll_last_error()).to_str().unwrap().to_string() }
}

/// A short path with one strong interior obstruction.
fn bump_profile() -> (f64, Vec<f64>, Vec<f64>, f64, f64, f64) {
    let dtm = vec![100.0; 9];
    let mut dsm = dtm.clone();
    dsm[4] = 140.0;
    dsm[5] = 135.0;
    (50.0, dsm, dtm, 20.0, 2.0, 1800.0)
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(ll_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn param_count_matches_core() {
    assert_eq!(ll_param_count(8), param_count(8));
    assert_eq!(ll_param_count(8), 4801);
    assert_eq!(ll_param_count(4), 4545);
    assert_eq!(ll_param_count(0), 0);
}

#[test]
fn fspl_and_curvature_match_core() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(ll_fspl(900.0, 1000.0, &mut out), LlStatus::Ok);
        assert_eq!(out, fspl(900.0, 1000.0).unwrap());
        assert_eq!(ll_fspl(-900.0, 1000.0, &mut out), LlStatus::Domain);
        assert!(last_error().contains("domain"), "got: {}", last_error());

        assert_eq!(ll_curvature_drop(5000.0, 10000.0, 6_371_000.0, &mut out), LlStatus::Ok);
        assert!((out - 1.962).abs() < 1e-3);
        assert_eq!(ll_fspl(900.0, 1000.0, ptr::null_mut()), LlStatus::InvalidArgument);
    }
}

#[test]
fn extracted_features_match_core() {
    let (spacing, dsm, dtm, tx, rx, freq) = bump_profile();
    let expected = extract_features(
        &PathProfile::new(spacing, dsm.clone(), dtm.clone(), tx, rx, freq).unwrap(),
        MEAN_EARTH_RADIUS_M,
    )
    .unwrap()
    .to_array();

    let mut handle: *mut LlProfile = ptr::null_mut();
    let mut features = [0.0; LL_FEATURE_COUNT];
    unsafe {
        let status = ll_profile_create(
            spacing,
            dsm.as_ptr(),
            dtm.as_ptr(),
            dsm.len(),
            tx,
            rx,
            freq,
            &mut handle,
        );
        assert_eq!(status, LlStatus::Ok);
        assert_eq!(
            ll_extract_features(handle, MEAN_EARTH_RADIUS_M, features.as_mut_ptr()),
            LlStatus::Ok
        );
        ll_profile_free(handle);
    }
    assert_eq!(features, expected);
    assert_eq!(features[4], 1.0, "the bump is one block");
}

#[test]
fn invalid_profiles_report_status_and_message() {
    let (spacing, dsm, mut dtm, tx, rx, freq) = bump_profile();
    dtm[3] = 200.0; // terrain above the surface model
    let mut handle: *mut LlProfile = ptr::null_mut();
    unsafe {
        let status = ll_profile_create(
            spacing,
            dsm.as_ptr(),
            dtm.as_ptr(),
            dsm.len(),
            tx,
            rx,
            freq,
            &mut handle,
        );
        assert_eq!(status, LlStatus::InvalidProfile);
    }
    assert!(handle.is_null());
    assert!(!last_error().is_empty());

    unsafe {
        let status = ll_profile_create(
            spacing,
            ptr::null(),
            dtm.as_ptr(),
            dtm.len(),
            tx,
            rx,
            freq,
            &mut handle,
        );
        assert_eq!(status, LlStatus::InvalidArgument);
        // Free on null is a tolerated no-op.
        ll_profile_free(ptr::null_mut());
        ll_model_free(ptr::null_mut());
    }
}

#[test]
fn model_predictions_match_core_bit_for_bit() {
    let config = MlpConfig { input_dim: 3, hidden_width: 8, ..MlpConfig::for_input_dim(3) };
    let mut model = init_model(&config, 42).unwrap();
    model.normalizer = Normalizer {
        mean: vec![1.0, -2.0, 10.0],
        sd: vec![0.5, 2.0, 3.0],
    };

    let dir = tempfile::TempDir::new().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, &mut BufWriter::new(File::create(&path).unwrap())).unwrap();

    let rows = 5;
    let raw: Vec<f64> = (0..rows * 3).map(|i| (i as f64) * 0.7 - 4.0).collect();
    let expected = forward(
        &model,
        &linkloss::matrix::Matrix::from_vec(raw.clone(), rows, 3).unwrap(),
        ForwardMode::Infer,
    )
    .unwrap();

    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle: *mut LlModel = ptr::null_mut();
    let mut pred = vec![0.0; rows];
    unsafe {
        assert_eq!(ll_model_load_json(c_path.as_ptr(), &mut handle), LlStatus::Ok);
        assert_eq!(ll_model_input_dim(handle), 3);
        assert_eq!(
            ll_model_predict(handle, raw.as_ptr(), rows, 3, pred.as_mut_ptr()),
            LlStatus::Ok
        );
        // Wrong row width is rejected before any arithmetic.
        assert_eq!(
            ll_model_predict(handle, raw.as_ptr(), rows, 2, pred.as_mut_ptr()),
            LlStatus::InvalidArgument
        );
        assert!(last_error().contains("expects 3 features"), "got: {}", last_error());
        ll_model_free(handle);
    }
    assert_eq!(pred, expected);
}

#[test]
fn missing_model_file_is_an_io_error() {
    let c_path = CString::new("/nonexistent/model.json").unwrap();
    let mut handle: *mut LlModel = ptr::null_mut();
    unsafe {
        assert_eq!(ll_model_load_json(c_path.as_ptr(), &mut handle), LlStatus::Io);
    }
    assert!(handle.is_null());
    assert!(last_error().contains("/nonexistent/model.json"));
    assert_eq!(unsafe { ll_model_input_dim(ptr::null()) }, 0);
}

#[test]
fn committed_header_matches_the_generated_one() {
    let generated = include_str!(concat!(env!("OUT_DIR"), "/linkloss.h"));
    let committed = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/linkloss.h"),
    )
    .expect("include/linkloss.h is committed");
    assert_eq!(committed, generated, "regenerate include/linkloss.h by building this crate");
}

#[test]
fn c_program_compiles_against_header_and_library() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler on PATH; skipping");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target_dir = std::env::var("CARGO_TARGET_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|_| manifest.join("../../target"));
    let lib_dir = target_dir.join("debug");
    if !lib_dir.join("liblinkloss_ffi.so").exists() {
        eprintln!("cdylib not built at {}; skipping", lib_dir.display());
        return;
    }

    let dir = tempfile::TempDir::new().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include "linkloss.h"
#include <stdio.h>
#include <string.h>

int main(void) {
    if (strlen(ll_version()) == 0) return 10;
    if (ll_param_count(8) != 4801) return 11;
    double dtm[9] = {100, 100, 100, 100, 100, 100, 100, 100, 100};
    double dsm[9] = {100, 100, 100, 100, 140, 135, 100, 100, 100};
    LlProfile *p = NULL;
    if (ll_profile_create(50.0, dsm, dtm, 9, 20.0, 2.0, 1800.0, &p) != LL_STATUS_OK) return 12;
    double f[LL_FEATURE_COUNT];
    if (ll_extract_features(p, 6371000.0, f) != LL_STATUS_OK) return 13;
    ll_profile_free(p);
    if (f[1] != 400.0) return 14;
    if (f[4] != 1.0) return 15;
    double loss = 0.0;
    if (ll_fspl(900.0, 1000.0, &loss) != LL_STATUS_OK) return 16;
    if (!(loss > 90.0 && loss < 93.0)) return 17;
    LlProfile *bad = NULL;
    if (ll_profile_create(-1.0, dsm, dtm, 9, 20.0, 2.0, 1800.0, &bad) == LL_STATUS_OK) return 18;
    if (strlen(ll_last_error()) == 0) return 19;
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();

    let exe = dir.path().join("smoke");
    let compile = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-llinkloss_ffi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-o")
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        compile.status.success(),
        "cc failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "smoke test exit: {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "ok");
}
