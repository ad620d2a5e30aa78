//! C interface to the neelwall solver.
//!
//! Every object crosses the boundary as an opaque pointer owned by the
//! caller and released with the matching `*_free`. Every fallible call
//! returns an [`NwStatus`]; on failure the message is available from
//! [`nw_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use neelwall::energy::energy;
use neelwall::halflap::HalfLaplacianOperator;
use neelwall::io::{read_profile, write_profile};
use neelwall::model::{make_initial_profile, Grid, InitKind, ModelParams, WallProfile};
use neelwall::path::{uniqueness_certificate, CertificateOptions, Verdict};
use neelwall::solver::{minimize, SolveOptions};
use neelwall::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotConverged = 3,
    Io = 4,
    Parse = 5,
    Incompatible = 6,
    Numerical = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NwInit {
    Template = 0,
    Kink = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NwVerdict {
    Coincide = 0,
    NotBothSolutions = 1,
    Contradiction = 2,
    NonConvex = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NwEnergy {
    pub exchange: f64,
    pub potential: f64,
    pub stray: f64,
    pub total: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NwSolveSummary {
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub energy: NwEnergy,
}

/// Material parameters `nu` and `h`.
pub struct NwParams(ModelParams);

/// Symmetric uniform grid.
pub struct NwGrid(Grid);

/// Wall profile on a grid.
pub struct NwProfile(WallProfile);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> NwStatus {
    match err {
        Error::InvalidParams(_) | Error::InvalidGrid(_) | Error::InvalidArgument(_) => NwStatus::InvalidArgument,
        Error::NotConverged { .. } | Error::StepUnderflow { .. } => NwStatus::NotConverged,
        Error::Io { .. } => NwStatus::Io,
        Error::Parse { .. } => NwStatus::Parse,
        Error::Incompatible(_) => NwStatus::Incompatible,
        _ => NwStatus::Numerical,
    }
}

struct Failure(NwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NwStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<NwStatus, Failure>) -> NwStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NwStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure(NwStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn to_energy(e: neelwall::model::EnergyBreakdown) -> NwEnergy {
    NwEnergy {
        exchange: e.exchange,
        potential: e.potential,
        stray: e.stray,
        total: e.total,
    }
}

/// Message from the last fallible call on this thread if it failed, else null.
///
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn nw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn nw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn nw_params_new(nu: f64, h: f64, out: *mut *mut NwParams) -> NwStatus {
    guard(|| {
        store(out, NwParams(ModelParams::new(nu, h)?))?;
        Ok(NwStatus::Ok)
    })
}

/// # Safety
/// `params` must be null or come from `nw_params_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nw_params_free(params: *mut NwParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn nw_grid_new(n: usize, half_width: f64, out: *mut *mut NwGrid) -> NwStatus {
    guard(|| {
        store(out, NwGrid(Grid::new(n, half_width)?))?;
        Ok(NwStatus::Ok)
    })
}

/// Number of nodes, or 0 for a null grid.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn nw_grid_len(grid: *const NwGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// # Safety
/// `grid` must be null or come from `nw_grid_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nw_grid_free(grid: *mut NwGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Builds a starting profile. `width` is ignored for the template.
///
/// # Safety
/// `grid` and `params` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nw_profile_initial(
    grid: *const NwGrid,
    params: *const NwParams,
    init: NwInit,
    width: f64,
    out: *mut *mut NwProfile,
) -> NwStatus {
    guard(|| {
        let grid = borrow(grid, "grid")?;
        let params = borrow(params, "params")?;
        let kind = match init {
            NwInit::Template => InitKind::Template,
            NwInit::Kink => InitKind::Kink { width },
        };
        store(out, NwProfile(make_initial_profile(&grid.0, &params.0, kind)?))?;
        Ok(NwStatus::Ok)
    })
}

/// Wraps caller-supplied samples; `len` must equal the grid length.
///
/// # Safety
/// `theta` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn nw_profile_from_theta(
    grid: *const NwGrid,
    params: *const NwParams,
    theta: *const f64,
    len: usize,
    out: *mut *mut NwProfile,
) -> NwStatus {
    guard(|| {
        let grid = borrow(grid, "grid")?;
        let params = borrow(params, "params")?;
        if theta.is_null() {
            return Err(null("theta"));
        }
        let theta = std::slice::from_raw_parts(theta, len).to_vec();
        store(out, NwProfile(WallProfile::new(grid.0.clone(), params.0, theta)?))?;
        Ok(NwStatus::Ok)
    })
}

/// Number of samples, or 0 for a null profile.
///
/// # Safety
/// `profile` must be null or a live profile handle.
#[no_mangle]
pub unsafe extern "C" fn nw_profile_len(profile: *const NwProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.0.theta().len())
}

/// Copies the samples into `buf`, which must hold at least the profile length.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nw_profile_theta(profile: *const NwProfile, buf: *mut f64, len: usize) -> NwStatus {
    guard(|| {
        let p = borrow(profile, "profile")?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        let theta = p.0.theta();
        if len < theta.len() {
            return Err(Failure(
                NwStatus::InvalidArgument,
                format!("buffer holds {len} values, profile has {}", theta.len()),
            ));
        }
        ptr::copy_nonoverlapping(theta.as_ptr(), buf, theta.len());
        Ok(NwStatus::Ok)
    })
}

/// # Safety
/// `profile` must be null or come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nw_profile_free(profile: *mut NwProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nw_profile_read(path: *const c_char, out: *mut *mut NwProfile) -> NwStatus {
    guard(|| {
        let path = path_arg(path)?;
        store(out, NwProfile(read_profile(path)?))?;
        Ok(NwStatus::Ok)
    })
}

/// # Safety
/// `profile` must be a live handle; `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nw_profile_write(profile: *const NwProfile, path: *const c_char) -> NwStatus {
    guard(|| {
        let p = borrow(profile, "profile")?;
        write_profile(path_arg(path)?, &p.0)?;
        Ok(NwStatus::Ok)
    })
}

/// # Safety
/// `profile` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nw_profile_energy(profile: *const NwProfile, out: *mut NwEnergy) -> NwStatus {
    guard(|| {
        let p = borrow(profile, "profile")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let op = HalfLaplacianOperator::new(p.0.grid());
        *out = to_energy(energy(&p.0, &op)?);
        Ok(NwStatus::Ok)
    })
}

/// Minimizes from `start` with the default quasi-Newton method.
///
/// A result is stored in `out` even when the iteration budget runs out, in
/// which case the status is `NotConverged`. `summary` may be null.
///
/// # Safety
/// `start` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nw_minimize(
    start: *const NwProfile,
    grad_tol: f64,
    max_iter: usize,
    out: *mut *mut NwProfile,
    summary: *mut NwSolveSummary,
) -> NwStatus {
    guard(|| {
        let p = borrow(start, "start")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let opts = SolveOptions {
            grad_tol,
            max_iter,
            ..SolveOptions::default()
        };
        let (result, report) = minimize(&p.0, &opts)?;
        if let Some(s) = summary.as_mut() {
            *s = NwSolveSummary {
                iterations: report.iterations,
                grad_norm: report.final_grad_norm,
                converged: report.converged,
                energy: to_energy(report.final_energy),
            };
        }
        store(out, NwProfile(result))?;
        if report.converged {
            Ok(NwStatus::Ok)
        } else {
            set_error(report.ensure_converged().unwrap_err().to_string());
            Ok(NwStatus::NotConverged)
        }
    })
}

/// Runs the convexity certificate along the arcsin path between two profiles.
///
/// # Safety
/// `first` and `second` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nw_certificate(
    first: *const NwProfile,
    second: *const NwProfile,
    out: *mut NwVerdict,
) -> NwStatus {
    guard(|| {
        let a = borrow(first, "first")?;
        let b = borrow(second, "second")?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let cert = uniqueness_certificate(&a.0, &b.0, &CertificateOptions::default())?;
        *out = match cert.verdict {
            Verdict::Coincide => NwVerdict::Coincide,
            Verdict::NotBothSolutions => NwVerdict::NotBothSolutions,
            Verdict::Contradiction => NwVerdict::Contradiction,
            Verdict::NonConvex => NwVerdict::NonConvex,
        };
        Ok(NwStatus::Ok)
    })
}
