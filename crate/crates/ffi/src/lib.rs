//! C ABI over `lrd-core`.
//!
//! Every function returns an [`LrdStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`lrd_last_error_message`]. Handles are opaque and freed by the matching
//! `_free` function; passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use lrd_core::baxter::{baxter_lhs, baxter_rhs, limit_constant};
use lrd_core::duality::ArCoefficient;
use lrd_core::kernels::{b_fast, KernelTable};
use lrd_core::model::LrdModel;
use lrd_core::montecarlo::simulate;
use lrd_core::prediction::{error_variance, ErrorMode, FinitePredictor, Predictor, PredictionWindow};
use lrd_core::quad::QuadratureConfig;
use lrd_core::LrdError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    Quadrature = 4,
    InversionUnstable = 5,
    GridCoverage = 6,
    SeriesNotConverged = 7,
    UnsupportedDepth = 8,
    Instability = 9,
    Factorization = 10,
    Io = 11,
    Parse = 12,
    Panic = 13,
}

impl From<&LrdError> for LrdStatus {
    fn from(e: &LrdError) -> Self {
        match e {
            LrdError::InvalidModel(_) => LrdStatus::InvalidModel,
            LrdError::InvalidArgument(_) => LrdStatus::InvalidArgument,
            LrdError::Quadrature { .. } => LrdStatus::Quadrature,
            LrdError::InversionUnstable { .. } => LrdStatus::InversionUnstable,
            LrdError::GridCoverage { .. } => LrdStatus::GridCoverage,
            LrdError::SeriesNotConverged { .. } => LrdStatus::SeriesNotConverged,
            LrdError::UnsupportedDepth { .. } => LrdStatus::UnsupportedDepth,
            LrdError::Instability(_) => LrdStatus::Instability,
            LrdError::Factorization { .. } => LrdStatus::Factorization,
            LrdError::Io(_) => LrdStatus::Io,
            LrdError::Parse(_) => LrdStatus::Parse,
        }
    }
}

/// Which error variance [`lrd_predictor_error_variance`] returns.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrdErrorMode {
    InfinitePast = 0,
    FinitePast = 1,
}

/// A model together with its AR(∞) coefficient.
pub struct LrdModelHandle {
    ar: Arc<ArCoefficient>,
    q: QuadratureConfig,
}

/// Finite-past predictor for one window.
pub struct LrdPredictorHandle {
    pred: FinitePredictor,
    q: QuadratureConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> LrdStatus
where
    F: FnOnce() -> Result<(), LrdStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LrdStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            LrdStatus::Panic
        }
    }
}

fn fail(e: LrdError) -> LrdStatus {
    set_error(e.to_string());
    LrdStatus::from(&e)
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, LrdStatus>;
}

impl<T> OrStatus<T> for lrd_core::Result<T> {
    fn or_status(self) -> Result<T, LrdStatus> {
        self.map_err(fail)
    }
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, LrdStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer argument".into());
        LrdStatus::NullPointer
    })
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), LrdStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(LrdStatus::NullPointer);
    }
    out.write(v);
    Ok(())
}

fn new_model(m: LrdModel) -> Result<*mut LrdModelHandle, LrdStatus> {
    let ar = Arc::new(ArCoefficient::new(&m).or_status()?);
    Ok(Box::into_raw(Box::new(LrdModelHandle {
        ar,
        q: QuadratureConfig::default(),
    })))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn lrd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fractional Brownian motion with Hurst index `h` in (1/2, 1).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_model_fbm(h: f64, out: *mut *mut LrdModelHandle) -> LrdStatus {
    guard(|| write(out, new_model(LrdModel::fbm(h).or_status()?)?))
}

/// Two-index model; `scale_k <= 0` selects the default scale.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_model_two_index(
    h: f64,
    h0: f64,
    scale_k: f64,
    out: *mut *mut LrdModelHandle,
) -> LrdStatus {
    guard(|| {
        let k = (scale_k > 0.0).then_some(scale_k);
        write(out, new_model(LrdModel::two_index(h, h0, k).or_status()?)?)
    })
}

/// Model from a JSON document such as `{"kind": "fbm", "H": 0.75}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_model_from_json(json: *const c_char, out: *mut *mut LrdModelHandle) -> LrdStatus {
    guard(|| {
        if json.is_null() {
            set_error("null model document".into());
            return Err(LrdStatus::NullPointer);
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(LrdError::InvalidArgument("model document is not UTF-8".into())))?;
        write(out, new_model(LrdModel::from_json(text).or_status()?)?)
    })
}

/// Override the relative quadrature tolerance used by later calls.
///
/// # Safety
/// `model` must come from one of the constructors.
#[no_mangle]
pub unsafe extern "C" fn lrd_model_set_tolerance(model: *mut LrdModelHandle, rel_tol: f64) -> LrdStatus {
    guard(|| {
        let m = model.as_mut().ok_or(LrdStatus::NullPointer)?;
        let q = m.q.with_rel_tol(rel_tol);
        q.validate().or_status()?;
        m.q = q;
        Ok(())
    })
}

/// # Safety
/// `model` must come from one of the constructors and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrd_model_free(model: *mut LrdModelHandle) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn scalar<F>(model: *const LrdModelHandle, t: f64, out: *mut f64, f: F) -> LrdStatus
where
    F: FnOnce(&LrdModelHandle, f64) -> lrd_core::Result<f64>,
{
    guard(|| {
        let m = deref(model)?;
        write(out, f(m, t).or_status()?)
    })
}

/// MA(∞) coefficient `c(t)`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_model_c(model: *const LrdModelHandle, t: f64, out: *mut f64) -> LrdStatus {
    scalar(model, t, out, |m, t| m.ar.model().eval_c(t, &m.q))
}

/// `g(t) = ∫₀^t c`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_model_g(model: *const LrdModelHandle, t: f64, out: *mut f64) -> LrdStatus {
    scalar(model, t, out, |m, t| m.ar.model().eval_g(t, &m.q))
}

/// Variogram `E|X(t) − X(0)|²`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_model_variogram(model: *const LrdModelHandle, t: f64, out: *mut f64) -> LrdStatus {
    scalar(model, t, out, |m, t| m.ar.model().variogram(t, &m.q))
}

/// `α(t) = ∫_t^∞ a`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_ar_alpha(model: *const LrdModelHandle, t: f64, out: *mut f64) -> LrdStatus {
    scalar(model, t, out, |m, t| Ok(m.ar.alpha(t)))
}

/// AR(∞) coefficient `a(t)`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_ar_a(model: *const LrdModelHandle, t: f64, out: *mut f64) -> LrdStatus {
    scalar(model, t, out, |m, t| m.ar.eval_a(t))
}

/// `β(t) = ∫₀^∞ c(s) a(t+s) ds`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_ar_beta(model: *const LrdModelHandle, t: f64, out: *mut f64) -> LrdStatus {
    scalar(model, t, out, |m, t| m.ar.eval_beta(t, &m.q))
}

/// Infinite-past predictor kernel `b(t, s)`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_kernel_b(model: *const LrdModelHandle, t: f64, s: f64, out: *mut f64) -> LrdStatus {
    guard(|| {
        let m = deref(model)?;
        if !(t > 0.0 && s > 0.0) {
            return Err(fail(LrdError::InvalidArgument("b(t,s) needs t, s > 0".into())));
        }
        write(out, b_fast(&m.ar, t, s))
    })
}

/// Build the finite-past predictor for `[−t0, t1]` and target `T`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_predictor_new(
    model: *const LrdModelHandle,
    t0: f64,
    t1: f64,
    big_t: f64,
    out: *mut *mut LrdPredictorHandle,
) -> LrdStatus {
    guard(|| {
        let m = deref(model)?;
        let w = PredictionWindow::new(t0, t1, big_t).or_status()?;
        let table = Arc::new(KernelTable::build(m.ar.clone(), w.t2(), &m.q).or_status()?);
        let pred = FinitePredictor::new(table, w, &m.q).or_status()?;
        write(out, Box::into_raw(Box::new(LrdPredictorHandle { pred, q: m.q })))
    })
}

/// # Safety
/// `pred` must come from [`lrd_predictor_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrd_predictor_free(pred: *mut LrdPredictorHandle) {
    if !pred.is_null() {
        drop(Box::from_raw(pred));
    }
}

/// Coefficient of `dX(s)` in the finite-past predictor, `−t0 < s < t1`.
///
/// # Safety
/// `pred` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_predictor_coeff(pred: *const LrdPredictorHandle, s: f64, out: *mut f64) -> LrdStatus {
    guard(|| {
        let p = deref(pred)?;
        write(out, p.pred.coeff(s).or_status()?)
    })
}

/// Mean-square prediction error.
///
/// # Safety
/// `pred` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_predictor_error_variance(
    pred: *const LrdPredictorHandle,
    mode: LrdErrorMode,
    out: *mut f64,
) -> LrdStatus {
    guard(|| {
        let p = deref(pred)?;
        let mode = match mode {
            LrdErrorMode::InfinitePast => ErrorMode::InfinitePast,
            LrdErrorMode::FinitePast => ErrorMode::FinitePast,
        };
        let ar = p.pred.table().ar();
        let e = error_variance(ar, Some(&p.pred), p.pred.window(), mode, &p.q).or_status()?;
        write(out, e.total)
    })
}

/// Both sides of the Baxter inequality for the predictor's window.
///
/// # Safety
/// `pred` must be a live handle; `lhs` and `rhs` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn lrd_predictor_baxter(
    pred: *const LrdPredictorHandle,
    lhs: *mut f64,
    rhs: *mut f64,
) -> LrdStatus {
    guard(|| {
        let p = deref(pred)?;
        let l = baxter_lhs(&p.pred, &p.q).or_status()?;
        let r = baxter_rhs(p.pred.table().ar(), p.pred.window(), &p.q).or_status()?;
        write(lhs, l)?;
        write(rhs, r)
    })
}

/// Limit of the Baxter ratio for `0 < d < 1/2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lrd_limit_constant(d: f64, out: *mut f64) -> LrdStatus {
    guard(|| write(out, limit_constant(d, &QuadratureConfig::default()).or_status()?))
}

/// Exact Gaussian sample of `X` on `grid` (increasing, containing 0).
/// `values` receives `len` doubles.
///
/// # Safety
/// `grid` and `values` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrd_simulate(
    model: *const LrdModelHandle,
    grid: *const f64,
    len: usize,
    seed: u64,
    replicate: u64,
    values: *mut f64,
) -> LrdStatus {
    guard(|| {
        let m = deref(model)?;
        if grid.is_null() || values.is_null() {
            set_error("null grid or output buffer".into());
            return Err(LrdStatus::NullPointer);
        }
        let g = std::slice::from_raw_parts(grid, len);
        let path = simulate(m.ar.model(), g, seed, replicate, &m.q).or_status()?;
        std::slice::from_raw_parts_mut(values, len).copy_from_slice(&path.values);
        Ok(())
    })
}
