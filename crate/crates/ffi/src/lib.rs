//! C ABI over `renewal_coupling`.
//!
//! Laws are opaque `RcLaw` handles created by [`rc_law_parse`] and released
//! with [`rc_law_free`]. Every other function returns an [`RcStatus`] and
//! writes its result through an out-pointer; on failure the message is
//! kept per thread and can be copied out with [`rc_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use renewal_coupling::bounds::{optimize_r, BoundSet, DEFAULT_R_GRID};
use renewal_coupling::chain::{run_coupling, CouplingConfig};
use renewal_coupling::dist::{common_part, inverse_cdf, Law, LifetimeLaw};
use renewal_coupling::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Domain = 5,
    Infeasible = 6,
    NoOverlap = 7,
    Panic = 8,
}

/// Opaque lifetime law.
pub struct RcLaw {
    law: LifetimeLaw,
}

/// Constants of the total-variation bound.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RcBoundSet {
    pub alpha: f64,
    pub r: f64,
    pub theta: f64,
    pub pi_r: f64,
    pub p_r: f64,
    pub kappa_r: f64,
    pub q_r: f64,
    pub k1: f64,
    pub k2: f64,
    pub k_alpha_b1: f64,
    pub b1: f64,
}

/// Outcome of one coupled run. `tau` is NaN when `coupled` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RcCoupleResult {
    pub tau: f64,
    pub attempts: u64,
    pub coupled: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> RcStatus {
    match e {
        Error::Parse { .. } => RcStatus::Parse,
        Error::InvalidParameter(_) | Error::UnsupportedAge { .. } => RcStatus::InvalidArgument,
        Error::Domain(_) | Error::InfiniteMoment { .. } | Error::OutOfHorizon(_) => RcStatus::Domain,
        Error::Infeasible(_) => RcStatus::Infeasible,
        Error::NoOverlap => RcStatus::NoOverlap,
    }
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard<F: FnOnce() -> Result<(), (RcStatus, String)>>(f: F) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            RcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RcStatus::Panic
        }
    }
}

fn lib<T>(r: renewal_coupling::Result<T>) -> Result<T, (RcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (RcStatus, String) {
    (RcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn law_ref<'a>(p: *const RcLaw) -> Result<&'a LifetimeLaw, (RcStatus, String)> {
    p.as_ref().map(|h| &h.law).ok_or_else(|| null("law handle"))
}

/// Parses a law such as `"gamma(shape=2,rate=1)"` into a new handle.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a writable pointer.
/// The handle written to `out` must be released with [`rc_law_free`].
#[no_mangle]
pub unsafe extern "C" fn rc_law_parse(spec: *const c_char, out: *mut *mut RcLaw) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if spec.is_null() {
            return Err(null("spec"));
        }
        let text = CStr::from_ptr(spec)
            .to_str()
            .map_err(|_| (RcStatus::InvalidUtf8, "spec is not valid UTF-8".to_string()))?;
        let law = lib(LifetimeLaw::parse(text))?;
        *out = Box::into_raw(Box::new(RcLaw { law }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `law` must be null or a handle from [`rc_law_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_law_free(law: *mut RcLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_law_cdf(law: *const RcLaw, x: f64, out: *mut f64) -> RcStatus {
    guard(|| {
        let l = law_ref(law)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = l.cdf(x);
        Ok(())
    })
}

/// Generalised inverse cdf at `u` in `[0, 1)`.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_law_inverse_cdf(law: *const RcLaw, u: f64, out: *mut f64) -> RcStatus {
    guard(|| {
        let l = law_ref(law)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lib(inverse_cdf(l, u))?;
        Ok(())
    })
}

/// `E zeta^k`; `RC_STATUS_DOMAIN` when the moment is infinite.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_law_moment(law: *const RcLaw, k: f64, out: *mut f64) -> RcStatus {
    guard(|| {
        let l = law_ref(law)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = lib(l.moment(k))?;
        Ok(())
    })
}

/// `kappa = int min(f1, f2)`.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_common_part(a: *const RcLaw, b: *const RcLaw, out: *mut f64) -> RcStatus {
    guard(|| {
        let (la, lb) = (law_ref(a)?, law_ref(b)?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = common_part(la, lb).kappa;
        Ok(())
    })
}

/// Bound constants at `(alpha, r, b1)`. A non-positive or NaN `r` selects
/// the optimised threshold.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_bound_set(law: *const RcLaw, alpha: f64, r: f64, b1: f64, out: *mut RcBoundSet) -> RcStatus {
    guard(|| {
        let l = law_ref(law)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let set = if r > 0.0 {
            lib(BoundSet::compute(l, alpha, r, b1))?
        } else {
            lib(optimize_r(l, alpha, b1, None, DEFAULT_R_GRID))?.bound
        };
        *out = RcBoundSet {
            alpha: set.alpha,
            r: set.r,
            theta: set.theta,
            pi_r: set.pi_r,
            p_r: set.p_r,
            kappa_r: set.kappa_r,
            q_r: set.q_r,
            k1: set.k1,
            k2: set.k2,
            k_alpha_b1: set.k_of_alpha_b1,
            b1: set.b1,
        };
        Ok(())
    })
}

/// One coupled run from ages `b1`, `b2` with threshold `r`.
///
/// # Safety
/// `law` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rc_couple(
    law: *const RcLaw,
    b1: f64,
    b2: f64,
    r: f64,
    max_attempts: u64,
    seed: u64,
    out: *mut RcCoupleResult,
) -> RcStatus {
    guard(|| {
        let l = law_ref(law)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cfg = lib(CouplingConfig::new(l.clone(), b1, b2, r))?
            .with_seed(seed)
            .with_max_attempts(max_attempts);
        let run = lib(cfg.validate().and_then(|_| run_coupling(&cfg)))?;
        *out = RcCoupleResult {
            tau: run.tau.unwrap_or(f64::NAN),
            attempts: run.attempts,
            coupled: run.coupled,
        };
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns the length needed to
/// hold the whole message including the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}
