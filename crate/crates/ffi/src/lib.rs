//! C ABI over the `wass-hj` library.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! [`WhjStatus`]; on failure [`whj_last_error`] describes the cause for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wass_hj::grid::GridDensity;
use wass_hj::viscosity::{abs_fixture, rate_experiment};
use wass_hj::{io, w2, DiscreteMeasure, Error, OtMethod};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhjStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidInput = 3,
    DimensionMismatch = 4,
    NonConvergence = 5,
    SolverFailure = 6,
    Unsupported = 7,
    Parse = 8,
    Io = 9,
    Panic = 10,
}

/// Discrete probability measure.
pub struct WhjMeasure(DiscreteMeasure);

/// Density sampled on a regular grid.
pub struct WhjGrid(GridDensity);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WhjStatus {
    match e {
        Error::InvalidMeasure(_) | Error::InvalidCoupling(_) | Error::InvalidGrid(_) | Error::MarginalMismatch(_) => {
            WhjStatus::InvalidInput
        }
        Error::DimensionMismatch { .. } => WhjStatus::DimensionMismatch,
        Error::NonConvergence { .. } => WhjStatus::NonConvergence,
        Error::SolverFailure(_) | Error::PadInsufficient(_) => WhjStatus::SolverFailure,
        Error::UnsupportedFunctional(_) | Error::ConjugateUnavailable(_) => WhjStatus::Unsupported,
        Error::Parse(_) => WhjStatus::Parse,
        Error::Io(_) => WhjStatus::Io,
        Error::InvalidParameter(_) | Error::OutsideSupport(_) | Error::DegenerateDensity(_) => WhjStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WhjStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WhjStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed as `{what}`"));
            WhjStatus::NullPointer
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            WhjStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            WhjStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(v);
    Ok(())
}

/// Message for the last failed call on this thread, or null.
///
/// The pointer stays valid until the next call into this library from the
/// same thread.
#[no_mangle]
pub extern "C" fn whj_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn whj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a measure from `n` points of dimension `dim` (row-major) and
/// their weights, which must sum to one.
///
/// # Safety
/// `points` must hold `n * dim` values, `weights` `n` values, and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn whj_measure_new(
    dim: usize,
    points: *const f64,
    weights: *const f64,
    n: usize,
    out: *mut *mut WhjMeasure,
) -> WhjStatus {
    guard(|| {
        let count = n.checked_mul(dim).ok_or_else(|| Failure::Arg("n * dim overflows".into()))?;
        let pts = slice(points, count, "points")?.to_vec();
        let w = slice(weights, n, "weights")?.to_vec();
        let mu = DiscreteMeasure::from_flat(dim, pts, w)?;
        write(out, Box::into_raw(Box::new(WhjMeasure(mu))), "out")
    })
}

/// Parses a measure in the plain-text `dim=<d> atoms=<n>` format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn whj_measure_parse(text: *const c_char, out: *mut *mut WhjMeasure) -> WhjStatus {
    guard(|| {
        if text.is_null() {
            return Err(Failure::Null("text"));
        }
        let s = CStr::from_ptr(text).to_str().map_err(|e| Failure::Arg(format!("text is not UTF-8: {e}")))?;
        let mu = io::parse_measure(s)?;
        write(out, Box::into_raw(Box::new(WhjMeasure(mu))), "out")
    })
}

/// # Safety
/// `mu` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn whj_measure_free(mu: *mut WhjMeasure) {
    if !mu.is_null() {
        drop(Box::from_raw(mu));
    }
}

/// Number of atoms, or 0 for a null handle.
///
/// # Safety
/// `mu` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn whj_measure_len(mu: *const WhjMeasure) -> usize {
    mu.as_ref().map_or(0, |m| m.0.len())
}

/// Ambient dimension, or 0 for a null handle.
///
/// # Safety
/// `mu` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn whj_measure_dim(mu: *const WhjMeasure) -> usize {
    mu.as_ref().map_or(0, |m| m.0.dim())
}

/// # Safety
/// `mu` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn whj_measure_second_moment(mu: *const WhjMeasure, out: *mut f64) -> WhjStatus {
    guard(|| write(out, deref(mu, "mu")?.0.second_moment(), "out"))
}

/// Quadratic Wasserstein distance. `reg <= 0` selects the exact solver,
/// a positive `reg` entropic regularisation of that strength.
///
/// # Safety
/// `mu` and `nu` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn whj_w2(mu: *const WhjMeasure, nu: *const WhjMeasure, reg: f64, out: *mut f64) -> WhjStatus {
    guard(|| {
        let method = if reg > 0.0 { OtMethod::Entropic { reg } } else { OtMethod::Exact };
        let sol = w2(&deref(mu, "mu")?.0, &deref(nu, "nu")?.0, method)?;
        write(out, sol.distance, "out")
    })
}

/// Isotropic Gaussian `N(mean, σ²I)` on `n` nodes per axis covering ±6σ.
///
/// # Safety
/// `mean` must hold `dim` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn whj_grid_gaussian(
    mean: *const f64,
    dim: usize,
    sigma: f64,
    n: usize,
    out: *mut *mut WhjGrid,
) -> WhjStatus {
    guard(|| {
        if dim == 0 {
            return Err(Failure::Arg("dim must be positive".into()));
        }
        let g = GridDensity::gaussian(slice(mean, dim, "mean")?, sigma, n)?;
        write(out, Box::into_raw(Box::new(WhjGrid(g))), "out")
    })
}

/// # Safety
/// `g` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn whj_grid_free(g: *mut WhjGrid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// `∫ ρ log ρ`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn whj_grid_entropy(g: *const WhjGrid, out: *mut f64) -> WhjStatus {
    guard(|| write(out, deref(g, "grid")?.0.entropy(), "out"))
}

/// `∫ |∇ρ|²/ρ`.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn whj_grid_fisher(g: *const WhjGrid, out: *mut f64) -> WhjStatus {
    guard(|| {
        let v = deref(g, "grid")?.0.fisher_information()?;
        write(out, v, "out")
    })
}

/// Vanishing-viscosity experiment on `H = |p|`, `g = |x|` at half the
/// horizon: fitted exponent and the constant `C` with `err ≤ C√ε`.
///
/// `out_slope` receives NaN when the errors sit below the discretisation
/// floor and no exponent can be fitted.
///
/// # Safety
/// `eps` must hold `n_eps` values; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn whj_vv_rate_abs(
    grid_n: usize,
    eps: *const f64,
    n_eps: usize,
    out_slope: *mut f64,
    out_constant: *mut f64,
) -> WhjStatus {
    guard(|| {
        let prob = abs_fixture(grid_n)?;
        let r = rate_experiment(&prob, slice(eps, n_eps, "eps")?, 0.5 * prob.horizon)?;
        write(out_slope, r.slope.unwrap_or(f64::NAN), "out_slope")?;
        write(out_constant, r.constant, "out_constant")
    })
}
