//! C ABI over the entroprune library.
//!
//! Every function returns an [`EpStatus`] (or a plain value for accessors that
//! cannot fail) and never unwinds across the boundary. After a non-`Ok`
//! status, [`ep_last_error_message`] describes the failure on the calling
//! thread. Handles are opaque and must be released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use entroprune::distributed::{epfd, Criterion, DistributedConfig};
use entroprune::ensemble_io::load_predictions;
use entroprune::entropy::{norm_mi, norm_vi, LabelVector};
use entroprune::objective::{EnsemblePredictions, Objective, ObjectiveParams};
use entroprune::pruners::{pruner_by_name, Selection};
use entroprune::Error;

/// Result codes. `Ok` is zero; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpStatus {
    Ok = 0,
    InvalidInput = 1,
    Parse = 2,
    Config = 3,
    OracleTooLarge = 4,
    Io = 5,
    NullPointer = 6,
    InvalidUtf8 = 7,
    Panic = 8,
}

/// A prediction matrix with its true labels.
pub struct EpEnsemble(EnsemblePredictions);

/// A pruned sub-ensemble.
pub struct EpSelection(Selection);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

struct Failure(EpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) => EpStatus::InvalidInput,
            Error::Parse { .. } => EpStatus::Parse,
            Error::Config(_) => EpStatus::Config,
            Error::OracleTooLarge { .. } => EpStatus::OracleTooLarge,
            Error::Io(_) => EpStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(EpStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> EpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EpStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {message}"));
            EpStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(EpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn view<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn ensemble<'a>(p: *const EpEnsemble) -> Result<&'a EnsemblePredictions, Failure> {
    p.as_ref().map(|e| &e.0).ok_or_else(|| null("ensemble"))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Builds an ensemble from `n` rows of `d` class ids (row-major) and `d` labels.
///
/// # Safety
/// `predictions` must point to `n * d` values, `labels` to `d` values, and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn ep_ensemble_new(
    predictions: *const u32,
    n: usize,
    d: usize,
    labels: *const u32,
    out: *mut *mut EpEnsemble,
) -> EpStatus {
    guard(|| {
        let total = n
            .checked_mul(d)
            .ok_or_else(|| Failure(EpStatus::InvalidInput, "n * d overflows".into()))?;
        let flat = view(predictions, total, "predictions")?;
        let truth = view(labels, d, "labels")?;
        let rows = if d == 0 {
            vec![Vec::new(); n]
        } else {
            flat.chunks(d).map(<[u32]>::to_vec).collect()
        };
        let ens = EnsemblePredictions::from_raw(rows, truth.to_vec())?;
        emit(out, EpEnsemble(ens))
    })
}

/// Loads a prediction CSV and a label CSV.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ep_ensemble_load_csv(
    predictions_path: *const c_char,
    labels_path: *const c_char,
    out: *mut *mut EpEnsemble,
) -> EpStatus {
    guard(|| {
        let p = text(predictions_path, "predictions_path")?;
        let l = text(labels_path, "labels_path")?;
        emit(out, EpEnsemble(load_predictions(p, l)?))
    })
}

/// # Safety
/// `ens` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ep_ensemble_free(ens: *mut EpEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Number of classifiers, or 0 for a null handle.
///
/// # Safety
/// `ens` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ep_ensemble_n(ens: *const EpEnsemble) -> usize {
    ens.as_ref().map_or(0, |e| e.0.n())
}

/// Number of instances, or 0 for a null handle.
///
/// # Safety
/// `ens` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ep_ensemble_d(ens: *const EpEnsemble) -> usize {
    ens.as_ref().map_or(0, |e| e.0.d())
}

/// Prunes with a named pruner: `comep`, `reduce-error`, `kappa` or `random`.
///
/// # Safety
/// `ens` must be a live handle, `algo` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ep_prune(
    ens: *const EpEnsemble,
    algo: *const c_char,
    lambda: f64,
    k: usize,
    seed: u64,
    out: *mut *mut EpSelection,
) -> EpStatus {
    guard(|| {
        let ens = ensemble(ens)?;
        let pruner = pruner_by_name(text(algo, "algo")?)?;
        let params = ObjectiveParams::new(lambda, k)?;
        emit(out, EpSelection(pruner.prune(ens, &params, seed)?))
    })
}

/// Two-round distributed pruning of `machines` random groups with a named
/// pruner. `criterion` is `tdas` or `voted-accuracy`.
///
/// # Safety
/// As for [`ep_prune`]; `criterion` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ep_distributed(
    ens: *const EpEnsemble,
    algo: *const c_char,
    lambda: f64,
    k: usize,
    machines: usize,
    seed: u64,
    criterion: *const c_char,
    out: *mut *mut EpSelection,
) -> EpStatus {
    guard(|| {
        let ens = ensemble(ens)?;
        let pruner = pruner_by_name(text(algo, "algo")?)?;
        let criterion: Criterion = text(criterion, "criterion")?.parse()?;
        let params = ObjectiveParams::new(lambda, k)?;
        let config = DistributedConfig::new(machines, seed).with_criterion(criterion);
        let result = epfd(ens, &params, pruner.as_ref(), &config)?;
        emit(out, EpSelection(result.final_selection))
    })
}

/// # Safety
/// `sel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ep_selection_len(sel: *const EpSelection) -> usize {
    sel.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the selected indices, in selection order, into `buf`. Fails with
/// `InvalidInput` if `capacity` is smaller than the selection.
///
/// # Safety
/// `sel` must be a live handle and `buf` must have room for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn ep_selection_indices(sel: *const EpSelection, buf: *mut usize, capacity: usize) -> EpStatus {
    guard(|| {
        let sel = &sel.as_ref().ok_or_else(|| null("selection"))?.0;
        if capacity < sel.len() {
            return Err(Failure(
                EpStatus::InvalidInput,
                format!("buffer holds {capacity} indices, selection has {}", sel.len()),
            ));
        }
        if sel.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(sel.indices.as_ptr(), buf, sel.len());
        Ok(())
    })
}

/// Objective value of the selection, or NaN for a null handle.
///
/// # Safety
/// `sel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ep_selection_tdas(sel: *const EpSelection) -> f64 {
    sel.as_ref().map_or(f64::NAN, |s| s.0.tdas)
}

/// Pairwise-score evaluations spent by the pruner.
///
/// # Safety
/// `sel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ep_selection_eval_count(sel: *const EpSelection) -> u64 {
    sel.as_ref().map_or(0, |s| s.0.tdac_eval_count)
}

/// # Safety
/// `sel` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ep_selection_free(sel: *mut EpSelection) {
    if !sel.is_null() {
        drop(Box::from_raw(sel));
    }
}

/// Objective value of an arbitrary subset.
///
/// # Safety
/// `indices` must point to `count` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ep_tdas(
    ens: *const EpEnsemble,
    indices: *const usize,
    count: usize,
    lambda: f64,
    out: *mut f64,
) -> EpStatus {
    guard(|| {
        let ens = ensemble(ens)?;
        let subset = view(indices, count, "indices")?;
        let value = Objective::new(ens, lambda)?.tdas_pairwise(subset)?;
        *out.as_mut().ok_or_else(|| null("out"))? = value;
        Ok(())
    })
}

unsafe fn pair_score(
    x: *const u32,
    y: *const u32,
    d: usize,
    out: *mut f64,
    score: fn(&LabelVector, &LabelVector) -> entroprune::Result<f64>,
) -> EpStatus {
    guard(|| {
        let x = LabelVector::from_values(view(x, d, "x")?.to_vec())?;
        let y = LabelVector::from_values(view(y, d, "y")?.to_vec())?;
        let value = score(&x, &y)?;
        *out.as_mut().ok_or_else(|| null("out"))? = value;
        Ok(())
    })
}

/// Normalized mutual information of two label vectors of length `d`.
///
/// # Safety
/// `x` and `y` must point to `d` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ep_norm_mi(x: *const u32, y: *const u32, d: usize, out: *mut f64) -> EpStatus {
    pair_score(x, y, d, out, norm_mi)
}

/// Normalized variation of information of two label vectors of length `d`.
///
/// # Safety
/// `x` and `y` must point to `d` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ep_norm_vi(x: *const u32, y: *const u32, d: usize, out: *mut f64) -> EpStatus {
    pair_score(x, y, d, out, norm_vi)
}

/// Message for the last failure on this thread, or null if there was none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ep_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ep_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
