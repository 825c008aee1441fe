//! C ABI over `slopegrowth`.
//!
//! Objects are opaque handles created by `sg_*_new`/`sg_*_compute`/`sg_*_load`
//! functions and released with the matching `sg_*_free`. Every fallible call
//! returns an [`SgStatus`]; on failure `sg_last_error_message` describes the
//! error raised on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use slopegrowth::rates::{self, RateProfile, Window};
use slopegrowth::spectrum::{self, Binning, SlopeSpectrum};
use slopegrowth::{cache, specfile, Error, Preset, ProductGroupSpec, Rate};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    AlphabetMismatch = 3,
    Domain = 4,
    Config = 5,
    Resource = 6,
    LowData = 7,
    Overflow = 8,
    Format = 9,
    Usage = 10,
    Io = 11,
    Panic = 12,
}

/// A product group spec.
pub struct SgSpec(ProductGroupSpec);

/// A binned slope spectrum.
pub struct SgSpectrum(SlopeSpectrum);

/// An estimated slope profile.
pub struct SgProfile(RateProfile);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SgStatus {
    match e {
        Error::Input(_) => SgStatus::InvalidInput,
        Error::AlphabetMismatch { .. } => SgStatus::AlphabetMismatch,
        Error::Domain(_) => SgStatus::Domain,
        Error::Config(_) => SgStatus::Config,
        Error::Resource { .. } => SgStatus::Resource,
        Error::LowData { .. } => SgStatus::LowData,
        Error::Overflow(_) => SgStatus::Overflow,
        Error::Format { .. } => SgStatus::Format,
        Error::Usage(_) => SgStatus::Usage,
        Error::Io { .. } => SgStatus::Io,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SgStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Lib(Error::Input(format!("{what} is not valid UTF-8"))))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

/// Message of the last error on this thread, or null. Valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn sg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a preset spec. `n_rank` is used by `example51` only; 0 selects the default.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_spec_from_preset(name: *const c_char, n_rank: u32, out: *mut *mut SgSpec) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let name = str_arg(name, "name")?;
        let n = (n_rank > 0).then_some(n_rank as usize);
        let spec = Preset::from_name(name, n)?.spec()?;
        *out = Box::into_raw(Box::new(SgSpec(spec)));
        Ok(())
    })
}

/// Loads a spec file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_spec_from_file(path: *const c_char, out: *mut *mut SgSpec) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        *out = Box::into_raw(Box::new(SgSpec(specfile::load_spec(&path)?)));
        Ok(())
    })
}

/// Fingerprint of `spec` as a new string; release it with `sg_string_free`.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_spec_fingerprint(spec: *const SgSpec, out: *mut *mut c_char) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = handle(spec, "spec")?;
        *out = CString::new(spec.0.fingerprint()).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn sg_spec_free(spec: *mut SgSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Enumerates `spec` to abstract length `l_max` into `bins` angular bins.
/// `dedup` nonzero removes repeated elements; `jobs` 0 uses every core.
///
/// # Safety
/// `spec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_spectrum_compute(
    spec: *const SgSpec,
    l_max: u32,
    bins: u32,
    dedup: u8,
    jobs: u32,
    out: *mut *mut SgSpectrum,
) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = handle(spec, "spec")?;
        let jobs = if jobs == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            jobs as usize
        };
        let dedup = if dedup != 0 { slopegrowth::Dedup::On } else { slopegrowth::Dedup::Off };
        let s = spectrum::compute_spectrum(&spec.0, l_max, Binning::Angular { bins }, dedup, jobs, None)?;
        *out = Box::into_raw(Box::new(SgSpectrum(s)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_spectrum_load(path: *const c_char, out: *mut *mut SgSpectrum) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        *out = Box::into_raw(Box::new(SgSpectrum(cache::load_spectrum(&path)?)));
        Ok(())
    })
}

/// # Safety
/// `s` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sg_spectrum_save(s: *const SgSpectrum, path: *const c_char) -> SgStatus {
    guard(|| {
        let s = handle(s, "spectrum")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        cache::save_spectrum(&s.0, &path)?;
        Ok(())
    })
}

/// Largest complete annulus index.
///
/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_spectrum_n_max(s: *const SgSpectrum, out: *mut u32) -> SgStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(s, "spectrum")?.0.n_max;
        Ok(())
    })
}

/// Number of elements in annulus `n` (1-based).
///
/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_spectrum_annulus_count(s: *const SgSpectrum, n: u32, out: *mut u64) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = handle(s, "spectrum")?.0.annulus_count(n)?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn sg_spectrum_free(s: *mut SgSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Estimates the profile on a uniform grid of `grid_points` slopes.
/// `eps` lists `eps_len` decreasing tolerances; `window_lo == 0` selects the top half of the annuli.
///
/// # Safety
/// `s` must be a live handle, `eps` must point to `eps_len` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sg_profile_build(
    s: *const SgSpectrum,
    grid_points: u32,
    eps: *const f64,
    eps_len: usize,
    min_samples: u32,
    window_lo: u32,
    window_hi: u32,
    out: *mut *mut SgProfile,
) -> SgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let s = handle(s, "spectrum")?;
        if eps.is_null() {
            return Err(Fail::Null("eps"));
        }
        let schedule = std::slice::from_raw_parts(eps, eps_len);
        let window = if window_lo == 0 {
            Window::top_half(s.0.n_max)?
        } else {
            Window::new(window_lo, window_hi)?
        };
        let grid = rates::uniform_grid(grid_points as usize)?;
        let p = rates::build_profile(&s.0, &grid, schedule, window, min_samples)?;
        *out = Box::into_raw(Box::new(SgProfile(p)));
        Ok(())
    })
}

/// Number of grid points.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_profile_len(p: *const SgProfile, out: *mut usize) -> SgStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(p, "profile")?.0.points.len();
        Ok(())
    })
}

/// Grid point `i`. The sentinel rate is reported as `-INFINITY`; an undefined
/// stderr as NaN. `low_data` is set to 1 when the value is not backed by enough data.
///
/// # Safety
/// `p` must be a live handle and every output pointer valid.
#[no_mangle]
pub unsafe extern "C" fn sg_profile_point(
    p: *const SgProfile,
    i: usize,
    theta: *mut f64,
    delta: *mut f64,
    stderr: *mut f64,
    low_data: *mut u8,
) -> SgStatus {
    guard(|| {
        let prof = handle(p, "profile")?;
        let pt = prof
            .0
            .points
            .get(i)
            .ok_or_else(|| Error::Input(format!("index {i} out of range")))?;
        *out_arg(theta, "theta")? = pt.theta;
        *out_arg(delta, "delta")? = match pt.value {
            Rate::Finite(v) => v,
            Rate::NegInfinity => f64::NEG_INFINITY,
        };
        *out_arg(stderr, "stderr")? = pt.stderr.unwrap_or(f64::NAN);
        *out_arg(low_data, "low_data")? = u8::from(pt.low_data);
        Ok(())
    })
}

/// Maximizing slope and its rate.
///
/// # Safety
/// `p` must be a live handle and the output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn sg_profile_theta_star(p: *const SgProfile, theta: *mut f64, delta: *mut f64) -> SgStatus {
    guard(|| {
        let prof = handle(p, "profile")?;
        let t = rates::find_theta_star(&prof.0)?;
        *out_arg(theta, "theta")? = t.theta;
        *out_arg(delta, "delta")? = t.delta;
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn sg_profile_free(p: *mut SgProfile) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}
