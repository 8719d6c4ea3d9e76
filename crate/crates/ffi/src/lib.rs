//! C ABI over the `subsel` library.
//!
//! Objects cross the boundary as opaque handles created by a `*_load` /
//! `*_from_*` / `subsel_select` call and released with the matching `*_free`.
//! Every fallible call returns a [`SubselStatus`]; on failure a description is
//! available from [`subsel_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use subsel::active::{filter_by_scores, uncertainty, UncertaintyMethod};
use subsel::dataset::{load_features, save_features, FeatureMatrix};
use subsel::kernel::{cosine_similarity, euclidean_distance, sparsify_knn};
use subsel::models::ProbabilityVector;
use subsel::optimizer::{farthest_point, greedy_lazy, Budget, Objective, Selection};
use subsel::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubselStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Truncated = 5,
    Parse = 6,
    Validation = 7,
    Capacity = 8,
    Unsupported = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubselObjective {
    FacilityLocation = 0,
    DisparityMin = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubselUncertainty {
    LeastConfidence = 0,
    Margin = 1,
    Entropy = 2,
}

/// Opaque feature matrix.
pub struct SubselFeatures(FeatureMatrix);

/// Opaque selection result.
pub struct SubselSelection(Selection);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> SubselStatus {
    match err {
        Error::Io { .. } => SubselStatus::Io,
        Error::Format(_) => SubselStatus::Format,
        Error::Truncated { .. } => SubselStatus::Truncated,
        Error::Parse { .. } | Error::Csv(_) => SubselStatus::Parse,
        Error::Validation(_) => SubselStatus::Validation,
        Error::Capacity(_) => SubselStatus::Capacity,
        Error::Unsupported(_) => SubselStatus::Unsupported,
        Error::Round { source, .. } => status_of(source),
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SubselStatus, String)>) -> SubselStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SubselStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            SubselStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (SubselStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SubselStatus, String) {
    (SubselStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, (SubselStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path).to_str().map_err(|_| {
        (
            SubselStatus::InvalidArgument,
            "path is not valid UTF-8".to_string(),
        )
    })
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn subsel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a binary (or `.csv`) feature file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subsel_features_load(
    path: *const c_char,
    out: *mut *mut SubselFeatures,
) -> SubselStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(path)?;
        let m = load_features(path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SubselFeatures(m)));
        Ok(())
    })
}

/// Copies an `n × d` row-major buffer into a new feature matrix.
///
/// # Safety
/// `data` must point to `n * d` readable floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subsel_features_from_data(
    data: *const f32,
    n: usize,
    d: usize,
    out: *mut *mut SubselFeatures,
) -> SubselStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(d)
            .ok_or((SubselStatus::InvalidArgument, "n * d overflows".to_string()))?;
        let values = std::slice::from_raw_parts(data, len).to_vec();
        let m = FeatureMatrix::new(n, d, values).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SubselFeatures(m)));
        Ok(())
    })
}

/// # Safety
/// `features` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn subsel_features_save(
    features: *const SubselFeatures,
    path: *const c_char,
) -> SubselStatus {
    guard(|| {
        let m = features.as_ref().ok_or_else(|| null("features"))?;
        let path = path_arg(path)?;
        save_features(&m.0, path).map_err(lib_err)
    })
}

/// # Safety
/// `features` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn subsel_features_rows(features: *const SubselFeatures) -> usize {
    features.as_ref().map_or(0, |m| m.0.n())
}

/// # Safety
/// `features` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn subsel_features_cols(features: *const SubselFeatures) -> usize {
    features.as_ref().map_or(0, |m| m.0.d())
}

/// # Safety
/// `features` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn subsel_features_free(features: *mut SubselFeatures) {
    if !features.is_null() {
        drop(Box::from_raw(features));
    }
}

/// Selects up to `budget` rows. Facility-Location uses the shifted-cosine
/// kernel (sparsified to `kappa` neighbours per row when `kappa > 0`) and lazy
/// greedy; Disparity-Min uses Euclidean distance and farthest-point greedy,
/// and requires `kappa == 0`.
///
/// # Safety
/// `features` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subsel_select(
    features: *const SubselFeatures,
    objective: SubselObjective,
    budget: usize,
    kappa: usize,
    out: *mut *mut SubselSelection,
) -> SubselStatus {
    guard(|| {
        let m = &features.as_ref().ok_or_else(|| null("features"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let rows: Vec<usize> = (0..m.n()).collect();
        let b = Budget::new(budget, m.n()).map_err(lib_err)?;
        let sel = match objective {
            SubselObjective::FacilityLocation => {
                let mut k = cosine_similarity(m, &rows).map_err(lib_err)?;
                if kappa > 0 {
                    k = sparsify_knn(&k, kappa).map_err(lib_err)?;
                }
                greedy_lazy(Objective::FacilityLocation(&k), b).map_err(lib_err)?
            }
            SubselObjective::DisparityMin => {
                if kappa > 0 {
                    return Err((
                        SubselStatus::InvalidArgument,
                        "sparsification applies to facility location only".to_string(),
                    ));
                }
                let k = euclidean_distance(m, &rows).map_err(lib_err)?;
                farthest_point(Objective::DisparityMin(&k), b).map_err(lib_err)?
            }
        };
        *out = Box::into_raw(Box::new(SubselSelection(sel)));
        Ok(())
    })
}

/// # Safety
/// `selection` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn subsel_selection_len(selection: *const SubselSelection) -> usize {
    selection.as_ref().map_or(0, |s| s.0.indices.len())
}

/// Selected row indices in selection order; `subsel_selection_len` entries.
/// Owned by the handle.
///
/// # Safety
/// `selection` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn subsel_selection_indices(
    selection: *const SubselSelection,
) -> *const usize {
    selection
        .as_ref()
        .map_or(ptr::null(), |s| s.0.indices.as_ptr())
}

/// Objective value of the selection (+inf for a Disparity-Min singleton).
///
/// # Safety
/// `selection` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn subsel_selection_value(selection: *const SubselSelection) -> f64 {
    selection.as_ref().map_or(f64::NAN, |s| s.0.final_value)
}

/// # Safety
/// `selection` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn subsel_selection_free(selection: *mut SubselSelection) {
    if !selection.is_null() {
        drop(Box::from_raw(selection));
    }
}

/// Uncertainty of a class-probability vector.
///
/// # Safety
/// `probs` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subsel_uncertainty(
    probs: *const f64,
    len: usize,
    method: SubselUncertainty,
    out: *mut f64,
) -> SubselStatus {
    guard(|| {
        if probs.is_null() {
            return Err(null("probs"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let p = ProbabilityVector::new(std::slice::from_raw_parts(probs, len).to_vec())
            .map_err(lib_err)?;
        let method = match method {
            SubselUncertainty::LeastConfidence => UncertaintyMethod::LeastConfidence,
            SubselUncertainty::Margin => UncertaintyMethod::Margin,
            SubselUncertainty::Entropy => UncertaintyMethod::Entropy,
        };
        *out = uncertainty(&p, method).map_err(lib_err)?;
        Ok(())
    })
}

/// Keeps the `ceil(beta_percent/100 · len)` highest scores plus exact ties
/// with the last kept one. Writes positions into `out_positions` (capacity
/// `len`) by descending score and the count into `out_len`.
///
/// # Safety
/// `scores` must point to `len` readable doubles, `out_positions` to `len`
/// writable entries, and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subsel_filter_uncertain(
    scores: *const f64,
    len: usize,
    beta_percent: f64,
    out_positions: *mut usize,
    out_len: *mut usize,
) -> SubselStatus {
    guard(|| {
        if scores.is_null() {
            return Err(null("scores"));
        }
        if out_positions.is_null() || out_len.is_null() {
            return Err(null("output buffer"));
        }
        let scores = std::slice::from_raw_parts(scores, len);
        let pool: Vec<usize> = (0..len).collect();
        let f = filter_by_scores(&pool, scores, beta_percent).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(out_positions, f.len()).copy_from_slice(&f.members);
        *out_len = f.len();
        Ok(())
    })
}
