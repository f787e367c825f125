//! C ABI over `speclab`.
//!
//! Every fallible call returns a [`SpeclabStatus`]; outputs go through
//! caller-provided pointers. Objects are opaque handles released with the
//! matching `*_free`. The message for the last failure on the calling
//! thread is available from [`speclab_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use speclab::cocycle::{Cocycle, CocycleKind, JacobiModel};
use speclab::diophantine::{beta, default_window, expand, synth_alpha_with_prefix, ContinuedFraction, HighPrecisionReal};
use speclab::ehm::{self, Region};
use speclab::operator::{build, eigensolve, ids};
use speclab::symbol::{TorusSymbol, C64};
use speclab::Error;

/// Status codes; 2, 3 and 4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeclabStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or a buffer that is too small.
    InvalidArgument = 1,
    Validation = 2,
    Contract = 3,
    Resource = 4,
    Panic = 5,
}

/// Parameter region of the extended Harper's model.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeclabRegion {
    RegionI = 1,
    RegionII = 2,
    RegionIII = 3,
    Boundary = 0,
}

/// Continued-fraction expansion of a frequency.
pub struct SpeclabCf {
    cf: ContinuedFraction,
}

/// Extended Harper's model at a fixed frequency.
pub struct SpeclabModel {
    model: JacobiModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpeclabStatus {
    match e.exit_code() {
        2 => SpeclabStatus::Validation,
        4 => SpeclabStatus::Resource,
        _ => SpeclabStatus::Contract,
    }
}

enum Fail {
    Arg(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SpeclabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpeclabStatus::Ok,
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg.to_string());
            SpeclabStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SpeclabStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Arg("null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Arg("null handle"))
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Arg("null array"));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Arg("null string"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Arg("string is not UTF-8"))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn speclab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn speclab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

// -- continued fractions ---------------------------------------------------

/// Expands `alpha` (`golden`, `silver`, `p/q` or a decimal) to `depth`
/// partial quotients.
///
/// # Safety
/// `alpha` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn speclab_cf_expand(alpha: *const c_char, depth: usize, out_cf: *mut *mut SpeclabCf) -> SpeclabStatus {
    guard(|| {
        let o = out(out_cf)?;
        let a = HighPrecisionReal::parse(text(alpha)?)?;
        *o = Box::into_raw(Box::new(SpeclabCf { cf: expand(&a, depth)? }));
        Ok(())
    })
}

/// Frequency whose quotients grow so that `q_{n+1} ≈ e^{β q_n}` after the
/// given prefix.
///
/// # Safety
/// `prefix` must hold `prefix_len` values and `out_cf` be valid.
#[no_mangle]
pub unsafe extern "C" fn speclab_cf_synthesize(
    target_beta: f64,
    prefix: *const u64,
    prefix_len: usize,
    levels: usize,
    out_cf: *mut *mut SpeclabCf,
) -> SpeclabStatus {
    guard(|| {
        let o = out(out_cf)?;
        let cf = synth_alpha_with_prefix(slice(prefix, prefix_len)?, target_beta, levels)?;
        *o = Box::into_raw(Box::new(SpeclabCf { cf }));
        Ok(())
    })
}

/// # Safety
/// `cf` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn speclab_cf_free(cf: *mut SpeclabCf) {
    if !cf.is_null() {
        drop(Box::from_raw(cf));
    }
}

/// Number of partial quotients.
///
/// # Safety
/// `cf` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn speclab_cf_depth(cf: *const SpeclabCf, out_depth: *mut usize) -> SpeclabStatus {
    guard(|| {
        *out(out_depth)? = handle(cf)?.cf.depth();
        Ok(())
    })
}

/// Frequency as a double.
///
/// # Safety
/// `cf` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn speclab_cf_alpha(cf: *const SpeclabCf, out_alpha: *mut f64) -> SpeclabStatus {
    guard(|| {
        *out(out_alpha)? = handle(cf)?.cf.frequency().value();
        Ok(())
    })
}

/// Denominator `q_n` when it fits in 64 bits; `Resource` otherwise.
///
/// # Safety
/// `cf` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn speclab_cf_q(cf: *const SpeclabCf, n: usize, out_q: *mut u64) -> SpeclabStatus {
    guard(|| {
        let o = out(out_q)?;
        let cf = &handle(cf)?.cf;
        if n >= cf.q.len() {
            return Err(Error::InsufficientDepth { needed: n + 1, have: cf.q.len() }.into());
        }
        *o = cf.q_u64(n).ok_or(Error::Overflow { bits: cf.q[n].bits() })?;
        Ok(())
    })
}

/// `β(α)` over the last `window` levels; 0 picks the default window.
///
/// # Safety
/// `cf` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn speclab_cf_beta(cf: *const SpeclabCf, window: usize, out_beta: *mut f64) -> SpeclabStatus {
    guard(|| {
        let o = out(out_beta)?;
        let cf = &handle(cf)?.cf;
        let w = if window == 0 { default_window(cf) } else { window };
        *o = beta(cf, w)?.value;
        Ok(())
    })
}

// -- extended Harper's model -----------------------------------------------

/// # Safety
/// `out_region` must be valid.
#[no_mangle]
pub unsafe extern "C" fn speclab_ehm_classify(l1: f64, l2: f64, l3: f64, out_region: *mut SpeclabRegion) -> SpeclabStatus {
    guard(|| {
        let o = out(out_region)?;
        *o = match ehm::classify([l1, l2, l3])?.region {
            Region::I => SpeclabRegion::RegionI,
            Region::II => SpeclabRegion::RegionII,
            Region::III => SpeclabRegion::RegionIII,
            Region::Boundary => SpeclabRegion::Boundary,
        };
        Ok(())
    })
}

/// Closed-form Lyapunov exponent on region I.
///
/// # Safety
/// `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn speclab_ehm_lyapunov_closed_form(l1: f64, l2: f64, l3: f64, out_value: *mut f64) -> SpeclabStatus {
    guard(|| {
        *out(out_value)? = ehm::lyapunov_closed_form([l1, l2, l3])?;
        Ok(())
    })
}

/// Model with hopping `λ₁e^{−2πi(θ+α/2)} + λ₂ + λ₃e^{2πi(θ+α/2)}` and
/// potential `2cos2πθ`. The frequency is copied from `cf`.
///
/// # Safety
/// `cf` must be a live handle and `out_model` valid.
#[no_mangle]
pub unsafe extern "C" fn speclab_model_new_ehm(
    l1: f64,
    l2: f64,
    l3: f64,
    cf: *const SpeclabCf,
    out_model: *mut *mut SpeclabModel,
) -> SpeclabStatus {
    guard(|| {
        let o = out(out_model)?;
        let model = ehm::model([l1, l2, l3], handle(cf)?.cf.clone())?;
        *o = Box::into_raw(Box::new(SpeclabModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn speclab_model_free(model: *mut SpeclabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Lyapunov exponent of the normalized cocycle, averaged over `n_phases`
/// seeded phases.
///
/// # Safety
/// `model` must be a live handle; outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn speclab_model_lyapunov(
    model: *const SpeclabModel,
    energy: f64,
    n_iter: u64,
    n_phases: usize,
    seed: u64,
    out_value: *mut f64,
    out_stderr: *mut f64,
) -> SpeclabStatus {
    guard(|| {
        let (v, s) = (out(out_value)?, out(out_stderr)?);
        let m = handle(model)?.model.clone();
        let est = Cocycle::new(m, energy, CocycleKind::Normalized).lyapunov(n_iter, n_phases, seed)?;
        *v = est.value;
        *s = est.stderr;
        Ok(())
    })
}

/// Fibered rotation number in `[0, 1/2]`.
///
/// # Safety
/// `model` must be a live handle; `out_rho` valid.
#[no_mangle]
pub unsafe extern "C" fn speclab_model_rotation_number(
    model: *const SpeclabModel,
    energy: f64,
    n_iter: u64,
    theta0: f64,
    out_rho: *mut f64,
) -> SpeclabStatus {
    guard(|| {
        let o = out(out_rho)?;
        let m = handle(model)?.model.clone();
        *o = Cocycle::new(m, energy, CocycleKind::Normalized).rotation_number(n_iter, theta0)?;
        Ok(())
    })
}

/// Integrated density of states at `n_energies` energies, written to
/// `out_values`.
///
/// # Safety
/// `energies` and `out_values` must hold `n_energies` doubles.
#[no_mangle]
pub unsafe extern "C" fn speclab_model_ids(
    model: *const SpeclabModel,
    energies: *const f64,
    n_energies: usize,
    n_half: usize,
    n_phases: usize,
    seed: u64,
    out_values: *mut f64,
) -> SpeclabStatus {
    guard(|| {
        let grid = slice(energies, n_energies)?;
        if n_energies > 0 && out_values.is_null() {
            return Err(Fail::Arg("null output array"));
        }
        let curve = ids(&handle(model)?.model, grid, n_half, n_phases, seed)?;
        if n_energies > 0 {
            std::slice::from_raw_parts_mut(out_values, n_energies).copy_from_slice(&curve.values);
        }
        Ok(())
    })
}

/// Eigenvalues of the truncation to `[−n_half, n_half]` at phase `theta`,
/// ascending. `capacity` must be at least `2·n_half + 1`; the count is
/// written to `out_len`.
///
/// # Safety
/// `out_values` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn speclab_model_eigenvalues(
    model: *const SpeclabModel,
    theta: f64,
    n_half: usize,
    out_values: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> SpeclabStatus {
    guard(|| {
        let len = out(out_len)?;
        let n = 2 * n_half + 1;
        *len = n;
        if capacity < n || out_values.is_null() {
            return Err(Fail::Arg("eigenvalue buffer too small"));
        }
        let sd = eigensolve(&build(&handle(model)?.model, theta, n_half), false)?;
        std::slice::from_raw_parts_mut(out_values, n).copy_from_slice(&sd.eigenvalues);
        Ok(())
    })
}

// -- symbols -----------------------------------------------------------------

/// Winding number of `Σ_k (re_k + i·im_k) e^{2πi(kmin+k)θ}` for
/// `k = 0..n_coeffs`.
///
/// # Safety
/// `re` and `im` must hold `n_coeffs` doubles.
#[no_mangle]
pub unsafe extern "C" fn speclab_winding(
    re: *const f64,
    im: *const f64,
    n_coeffs: usize,
    kmin: i64,
    out_winding: *mut i64,
) -> SpeclabStatus {
    guard(|| {
        let o = out(out_winding)?;
        let (re, im) = (slice(re, n_coeffs)?, slice(im, n_coeffs)?);
        if n_coeffs == 0 {
            return Err(Fail::Arg("empty symbol"));
        }
        let coeffs: Vec<C64> = re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect();
        *o = TorusSymbol::new(kmin, coeffs, false, 0.0, f64::INFINITY).winding(4096)?;
        Ok(())
    })
}

// -- runner ------------------------------------------------------------------

/// Runs one experiment from a JSON run config (the same format as the
/// command-line `--config` file) and returns its exit code.
///
/// # Safety
/// `config_json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn speclab_run_json(config_json: *const c_char) -> i32 {
    let mut code = 0;
    let status = guard(|| {
        let cfg: speclab::cli::RunConfig =
            serde_json::from_str(text(config_json)?).map_err(|e| Error::InvalidParameters(e.to_string()))?;
        code = speclab::cli::run(&cfg);
        Ok(())
    });
    match status {
        SpeclabStatus::Ok => code,
        SpeclabStatus::InvalidArgument => 2,
        s => s as i32,
    }
}
