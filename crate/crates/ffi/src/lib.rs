//! C ABI over the linkloss core: profile construction, feature
//! extraction, model loading, and prediction behind opaque handles.
//!
//! Conventions: every fallible call returns an [`LlStatus`]; on any status
//! other than `LL_STATUS_OK` a human-readable diagnostic is available from
//! [`ll_last_error`] until the next failing call on the same thread.
//! Handles created here must be released with the matching `_free`
//! function exactly once; all functions tolerate null handles by failing
//! cleanly rather than crashing.

use linkloss::features::extract_features;
use linkloss::matrix::Matrix;
use linkloss::metrics::fspl;
use linkloss::nn::{forward, load_model, param_count, ForwardMode, MlpModel};
use linkloss::profile::{curvature_drop, PathProfile};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Number of scalar features one profile yields.
pub const LL_FEATURE_COUNT: usize = 8;

/// Outcome of a fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlStatus {
    /// The call succeeded.
    Ok = 0,
    /// A pointer was null or an argument value was unusable.
    InvalidArgument = 1,
    /// The profile violates a structural invariant.
    InvalidProfile = 2,
    /// A numeric argument sits outside its mathematical domain.
    Domain = 3,
    /// Input bytes could not be decoded.
    Parse = 4,
    /// The operating system reported an I/O failure.
    Io = 5,
    /// An unexpected internal failure; report this as a bug.
    Internal = 6,
}

/// An immutable link path profile.
pub struct LlProfile(PathProfile);

/// A trained model ready for prediction.
pub struct LlModel(MlpModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: LlStatus, msg: &str) -> LlStatus {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
    status
}

fn fail_with(err: linkloss::Error) -> LlStatus {
    use linkloss::Error;
    let status = match &err {
        Error::InvalidProfile(_) => LlStatus::InvalidProfile,
        Error::Domain(_) => LlStatus::Domain,
        Error::Parse { .. } | Error::Sample { .. } | Error::Json(_) => LlStatus::Parse,
        Error::Io(_) => LlStatus::Io,
        Error::Shape(_) | Error::Degenerate(_) | Error::Config(_) => LlStatus::InvalidArgument,
        _ => LlStatus::Internal,
    };
    fail(status, &err.to_string())
}

fn guard(f: impl FnOnce() -> LlStatus) -> LlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(LlStatus::Internal, "internal panic"),
    }
}

/// Returns the diagnostic for the most recent failure on this thread, as a
/// NUL-terminated string. The pointer stays valid until the next failing
/// call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn ll_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ll_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Number of trainable parameters in the production architecture for the
/// given input width; zero if `n_features` is zero.
#[no_mangle]
pub extern "C" fn ll_param_count(n_features: usize) -> usize {
    if n_features == 0 {
        return 0;
    }
    param_count(n_features)
}

/// Free-space path loss in dB for a frequency in MHz and a distance in
/// metres, written to `out`.
#[no_mangle]
pub unsafe extern "C" fn ll_fspl(
    frequency_mhz: f64,
    distance_m: f64,
    out: *mut f64,
) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return fail(LlStatus::InvalidArgument, "out is null");
        }
        match fspl(frequency_mhz, distance_m) {
            Ok(v) => {
                *out = v;
                LlStatus::Ok
            }
            Err(err) => fail_with(err),
        }
    })
}

/// Effective-curvature bulge in metres at along-path position `x_m` on a
/// path of length `d_m` over an Earth of radius `radius_m`, written to
/// `out`.
#[no_mangle]
pub unsafe extern "C" fn ll_curvature_drop(
    x_m: f64,
    d_m: f64,
    radius_m: f64,
    out: *mut f64,
) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return fail(LlStatus::InvalidArgument, "out is null");
        }
        match curvature_drop(x_m, d_m, radius_m) {
            Ok(v) => {
                *out = v;
                LlStatus::Ok
            }
            Err(err) => fail_with(err),
        }
    })
}

/// Builds a validated path profile from parallel surface and terrain
/// arrays of `len` samples each and writes the new handle to `out`.
/// Heights are metres above sea level, sample `0` at the transmitter.
/// The arrays are copied; the caller keeps ownership of its buffers and
/// must release the handle with `ll_profile_free`.
#[no_mangle]
pub unsafe extern "C" fn ll_profile_create(
    spacing_m: f64,
    dsm_m: *const f64,
    dtm_m: *const f64,
    len: usize,
    tx_height_agl_m: f64,
    rx_height_agl_m: f64,
    frequency_mhz: f64,
    out: *mut *mut LlProfile,
) -> LlStatus {
    guard(|| {
        if out.is_null() || dsm_m.is_null() || dtm_m.is_null() {
            return fail(LlStatus::InvalidArgument, "null pointer argument");
        }
        let dsm = std::slice::from_raw_parts(dsm_m, len).to_vec();
        let dtm = std::slice::from_raw_parts(dtm_m, len).to_vec();
        match PathProfile::new(spacing_m, dsm, dtm, tx_height_agl_m, rx_height_agl_m, frequency_mhz)
        {
            Ok(profile) => {
                *out = Box::into_raw(Box::new(LlProfile(profile)));
                LlStatus::Ok
            }
            Err(err) => fail_with(err),
        }
    })
}

/// Releases a profile handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ll_profile_free(profile: *mut LlProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Extracts the eight obstruction features of a profile under an
/// effective Earth radius of `radius_m` metres, writing them in feature
/// order to `out_features`, which must hold `LL_FEATURE_COUNT` doubles.
#[no_mangle]
pub unsafe extern "C" fn ll_extract_features(
    profile: *const LlProfile,
    radius_m: f64,
    out_features: *mut f64,
) -> LlStatus {
    guard(|| {
        let Some(handle) = profile.as_ref() else {
            return fail(LlStatus::InvalidArgument, "profile is null");
        };
        if out_features.is_null() {
            return fail(LlStatus::InvalidArgument, "out_features is null");
        }
        match extract_features(&handle.0, radius_m) {
            Ok(fv) => {
                let values = fv.to_array();
                std::slice::from_raw_parts_mut(out_features, LL_FEATURE_COUNT)
                    .copy_from_slice(&values);
                LlStatus::Ok
            }
            Err(err) => fail_with(err),
        }
    })
}

/// Loads a model from a JSON file at the NUL-terminated `path` and writes
/// the new handle to `out`. Release it with `ll_model_free`.
#[no_mangle]
pub unsafe extern "C" fn ll_model_load_json(
    path: *const c_char,
    out: *mut *mut LlModel,
) -> LlStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(LlStatus::InvalidArgument, "null pointer argument");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(LlStatus::InvalidArgument, "path is not valid UTF-8");
        };
        let file = match File::open(path) {
            Ok(file) => file,
            Err(err) => return fail(LlStatus::Io, &format!("cannot open {path}: {err}")),
        };
        match load_model(BufReader::new(file)) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(LlModel(model)));
                LlStatus::Ok
            }
            Err(err) => fail_with(err),
        }
    })
}

/// Releases a model handle. Passing null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn ll_model_free(model: *mut LlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of input features the model expects; zero if `model` is null.
#[no_mangle]
pub unsafe extern "C" fn ll_model_input_dim(model: *const LlModel) -> usize {
    match model.as_ref() {
        Some(handle) => handle.0.config.input_dim,
        None => 0,
    }
}

/// Predicts path loss in dB for `n_rows` feature rows stored row-major in
/// `features` (`n_rows * n_features` doubles, raw unnormalized values;
/// the model applies its stored normalization). `n_features` must equal
/// the model's input width. Writes `n_rows` predictions to `out`.
#[no_mangle]
pub unsafe extern "C" fn ll_model_predict(
    model: *const LlModel,
    features: *const f64,
    n_rows: usize,
    n_features: usize,
    out: *mut f64,
) -> LlStatus {
    guard(|| {
        let Some(handle) = model.as_ref() else {
            return fail(LlStatus::InvalidArgument, "model is null");
        };
        if features.is_null() || out.is_null() {
            return fail(LlStatus::InvalidArgument, "null pointer argument");
        }
        if n_rows == 0 {
            return fail(LlStatus::InvalidArgument, "n_rows is zero");
        }
        if n_features != handle.0.config.input_dim {
            return fail(
                LlStatus::InvalidArgument,
                &format!(
                    "model expects {} features per row, got {n_features}",
                    handle.0.config.input_dim
                ),
            );
        }
        let data = std::slice::from_raw_parts(features, n_rows * n_features).to_vec();
        let inputs = match Matrix::from_vec(data, n_rows, n_features) {
            Ok(m) => m,
            Err(err) => return fail_with(err),
        };
        match forward(&handle.0, &inputs, ForwardMode::Infer) {
            Ok(pred) => {
                std::slice::from_raw_parts_mut(out, n_rows).copy_from_slice(&pred);
                LlStatus::Ok
            }
            Err(err) => fail_with(err),
        }
    })
}
