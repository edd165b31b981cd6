//! C ABI over the newsmacro library.
//!
//! Every function returns an [`NmStatus`]; outputs go through caller-provided
//! pointers. On failure, [`nm_last_error`] describes the most recent error on
//! the calling thread. Handles are opaque and must be released with their
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::{DMatrix, DVector};
use newsmacro::econometrics::adf::adf_test;
use newsmacro::econometrics::dm::dm_test;
use newsmacro::econometrics::multiple_testing::bh_adjust;
use newsmacro::econometrics::pls::{simpls, PlsModel};
use newsmacro::econometrics::EconError;
use newsmacro::gkg::{parse_record, GkgRecord, GkgSchema};
use newsmacro::pipeline::{self, Stage};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ParseError = 3,
    InsufficientData = 4,
    NumericalError = 5,
    NotFound = 6,
    PipelineError = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let msg = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(NmStatus, String);

impl From<EconError> for Failure {
    fn from(e: EconError) -> Self {
        let status = match e {
            EconError::InsufficientData(_) => NmStatus::InsufficientData,
            EconError::DimensionMismatch(_) | EconError::DomainError(_) => NmStatus::InvalidArgument,
            _ => NmStatus::NumericalError,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(NmStatus::NullArgument, format!("{name} is null"))
}

/// Run `f`, recording its error and converting panics into `Panic`.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> NmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            NmStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn slice_mut<'a>(data: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn string<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(NmStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn nm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// A parsed GKG 2.1 row.
pub struct NmRecord {
    record: GkgRecord,
    record_id: CString,
}

/// Parse one tab-delimited GKG 2.1 line (no trailing newline).
///
/// # Safety
/// `line` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_record_parse(line: *const c_char, out: *mut *mut NmRecord) -> NmStatus {
    guard(|| {
        let line = string(line, "line")?;
        let record = parse_record(line, &GkgSchema::gkg_v21()).map_err(|e| Failure(NmStatus::ParseError, e.to_string()))?;
        let record_id = CString::new(record.record_id.clone())
            .map_err(|_| Failure(NmStatus::ParseError, "record id contains NUL".into()))?;
        write(out, Box::into_raw(Box::new(NmRecord { record, record_id })), "out")
    })
}

/// # Safety
/// `record` must come from `nm_record_parse` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nm_record_free(record: *mut NmRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// Record identifier, owned by the handle.
///
/// # Safety
/// `record` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_record_id(record: *const NmRecord) -> *const c_char {
    record.as_ref().map_or(ptr::null(), |r| r.record_id.as_ptr())
}

/// # Safety
/// `record` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_record_word_count(record: *const NmRecord, out: *mut u64) -> NmStatus {
    guard(|| {
        let r = record.as_ref().ok_or_else(|| null("record"))?;
        write(out, r.record.word_count, "out")
    })
}

/// # Safety
/// `record` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_record_average_tone(record: *const NmRecord, out: *mut f64) -> NmStatus {
    guard(|| {
        let r = record.as_ref().ok_or_else(|| null("record"))?;
        write(out, r.record.tone.average_tone, "out")
    })
}

/// Number of themes and of location references.
///
/// # Safety
/// `record` must be a live handle; output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn nm_record_counts(record: *const NmRecord, themes: *mut usize, locations: *mut usize) -> NmStatus {
    guard(|| {
        let r = record.as_ref().ok_or_else(|| null("record"))?;
        write(themes, r.record.themes.len(), "themes")?;
        write(locations, r.record.locations.len(), "locations")
    })
}

/// Value of a GCAM key; `NotFound` when the record lacks it.
///
/// # Safety
/// `record` must be a live handle, `key` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_record_gcam_value(record: *const NmRecord, key: *const c_char, out: *mut f64) -> NmStatus {
    guard(|| {
        let r = record.as_ref().ok_or_else(|| null("record"))?;
        let key = string(key, "key")?;
        let v = r
            .record
            .gcam_value(key)
            .ok_or_else(|| Failure(NmStatus::NotFound, format!("no GCAM key {key}")))?;
        write(out, v, "out")
    })
}

/// Benjamini-Hochberg adjusted p-values, in input order.
///
/// # Safety
/// `p_values` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn nm_bh_adjust(p_values: *const f64, n: usize, out: *mut f64) -> NmStatus {
    guard(|| {
        let p = slice(p_values, n, "p_values")?;
        let out = slice_mut(out, n, "out")?;
        out.copy_from_slice(&bh_adjust(p)?);
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NmDmResult {
    pub statistic: f64,
    pub p_value: f64,
    pub mean_loss_diff: f64,
    pub degenerate: bool,
}

/// Diebold-Mariano test on squared loss; positive statistic when `errors_a`
/// has the larger loss.
///
/// # Safety
/// `errors_a` and `errors_b` must hold `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_dm_test(
    errors_a: *const f64,
    errors_b: *const f64,
    n: usize,
    horizon: usize,
    out: *mut NmDmResult,
) -> NmStatus {
    guard(|| {
        let r = dm_test(slice(errors_a, n, "errors_a")?, slice(errors_b, n, "errors_b")?, horizon)?;
        write(
            out,
            NmDmResult {
                statistic: r.statistic,
                p_value: r.p_value,
                mean_loss_diff: r.mean_loss_diff,
                degenerate: r.degenerate,
            },
            "out",
        )
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NmAdfResult {
    pub t_stat: f64,
    pub used_lag: usize,
    pub nobs: usize,
    /// 1%, 5%, 10%.
    pub critical_values: [f64; 3],
    pub reject_at_5pct: bool,
}

/// Augmented Dickey-Fuller test with a constant and AIC lag selection.
///
/// # Safety
/// `series` must hold `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_adf_test(series: *const f64, n: usize, max_lag: usize, out: *mut NmAdfResult) -> NmStatus {
    guard(|| {
        let r = adf_test(slice(series, n, "series")?, max_lag)?;
        write(
            out,
            NmAdfResult {
                t_stat: r.t_stat,
                used_lag: r.used_lag,
                nobs: r.nobs,
                critical_values: r.critical_values,
                reject_at_5pct: r.reject_at_5pct,
            },
            "out",
        )
    })
}

/// A fitted SIMPLS model.
pub struct NmPls {
    model: PlsModel,
}

/// Fit `components` PLS components of `y` on `x` (row-major, `n` × `k`).
///
/// # Safety
/// `x` must hold `n * k` doubles, `y` hold `n`, and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_pls_fit(
    x: *const f64,
    n: usize,
    k: usize,
    y: *const f64,
    components: usize,
    out: *mut *mut NmPls,
) -> NmStatus {
    guard(|| {
        let len = n
            .checked_mul(k)
            .ok_or_else(|| Failure(NmStatus::InvalidArgument, "n * k overflows".into()))?;
        let x = DMatrix::from_row_slice(n, k, slice(x, len, "x")?);
        let y = DVector::from_column_slice(slice(y, n, "y")?);
        let model = simpls(&x, &y, components)?;
        write(out, Box::into_raw(Box::new(NmPls { model })), "out")
    })
}

/// # Safety
/// `model` must come from `nm_pls_fit` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nm_pls_free(model: *mut NmPls) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nm_pls_components(model: *const NmPls, out: *mut usize) -> NmStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        write(out, m.model.n_components, "out")
    })
}

/// Predictions for `n` new rows (row-major, `n` × features).
///
/// # Safety
/// `model` must be a live handle, `x` hold `n * features` doubles, `out` hold `n`.
#[no_mangle]
pub unsafe extern "C" fn nm_pls_predict(model: *const NmPls, x: *const f64, n: usize, out: *mut f64) -> NmStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let k = m.model.n_features();
        let x = DMatrix::from_row_slice(n, k, slice(x, n * k, "x")?);
        let pred = m.model.predict(&x)?;
        slice_mut(out, n, "out")?.copy_from_slice(pred.as_slice());
        Ok(())
    })
}

/// Run the pipeline from `config_path` into `out_dir`. `stage` names one stage
/// or is null for all of them. A negative `seed` keeps the config seeds.
/// Pipeline failures leave the JSON error object in `nm_last_error`.
///
/// # Safety
/// Strings must be NUL-terminated; `stage` may be null.
#[no_mangle]
pub unsafe extern "C" fn nm_run_pipeline(
    config_path: *const c_char,
    out_dir: *const c_char,
    stage: *const c_char,
    seed: i64,
) -> NmStatus {
    guard(|| {
        let config = string(config_path, "config_path")?;
        let out = string(out_dir, "out_dir")?;
        let stage = if stage.is_null() {
            None
        } else {
            let s: Stage = string(stage, "stage")?
                .parse()
                .map_err(|e: pipeline::PipelineError| Failure(NmStatus::InvalidArgument, e.to_string()))?;
            Some(s)
        };
        let seed = u64::try_from(seed).ok();
        pipeline::run(Path::new(config), Path::new(out), stage, seed)
            .map(|_| ())
            .map_err(|e| Failure(NmStatus::PipelineError, e.to_json().to_string()))
    })
}
