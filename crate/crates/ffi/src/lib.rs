//! C ABI over the `multibell` library.
//!
//! States and strategies are opaque handles created by `mb_*_new`-style
//! constructors and released with the matching `*_free`. Every fallible call
//! returns an [`MbStatus`]; on failure `mb_last_error_message` describes the
//! most recent error on the calling thread. Output pointers are written only
//! on success.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use multibell::bounds::{classical_bound_additive, classical_vertex_bound_multiplicative, fd_max, fd_ratio};
use multibell::richer::{b2_bound_general, b2_bound_maxent, chsh_bound};
use multibell::strategies::{evaluate_strategy, saturating_strategy};
use multibell::{BlochVector, Complex64, Error, Strategy, TwoQubitState};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MbStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Capacity = 3,
    Degenerate = 4,
    Unsupported = 5,
    InvalidState = 6,
    NonConvergence = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Opaque two-qubit density matrix.
pub struct MbState(TwoQubitState);

/// Opaque pair of setting lists.
pub struct MbStrategy(Strategy);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MbStatus {
    match err {
        Error::Domain(_) | Error::Json(_) => MbStatus::Domain,
        Error::Capacity(_) => MbStatus::Capacity,
        Error::Degenerate(_) => MbStatus::Degenerate,
        Error::Unsupported(_) => MbStatus::Unsupported,
        Error::InvalidState(_) => MbStatus::InvalidState,
        Error::NonConvergence(_) => MbStatus::NonConvergence,
        Error::Io(_) => MbStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (MbStatus, String)>) -> MbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MbStatus::Panic
        }
    }
}

fn lib<T>(r: multibell::Result<T>) -> Result<T, (MbStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (MbStatus, String) {
    (MbStatus::NullPointer, format!("{name} is null"))
}

unsafe fn vector(p: *const f64, name: &str) -> Result<BlochVector, (MbStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    let v = std::slice::from_raw_parts(p, 3);
    lib(BlochVector::new(v[0], v[1], v[2]))
}

unsafe fn vectors(p: *const f64, n: usize, name: &str) -> Result<Vec<BlochVector>, (MbStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    (0..n).map(|k| vector(p.add(3 * k), name)).collect()
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), (MbStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    *out = value;
    Ok(())
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL,
/// or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn mb_state_singlet(out: *mut *mut MbState) -> MbStatus {
    guard(|| put(out, Box::into_raw(Box::new(MbState(TwoQubitState::singlet()))), "out"))
}

/// Werner state `p |singlet><singlet| + (1 - p) I/4`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn mb_state_werner(p: f64, out: *mut *mut MbState) -> MbStatus {
    guard(|| {
        let s = lib(TwoQubitState::werner(p))?;
        put(out, Box::into_raw(Box::new(MbState(s))), "out")
    })
}

/// # Safety
/// `state` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mb_state_free(state: *mut MbState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// `<a.sigma (x) b.sigma>`; `a` and `b` point to 3 doubles each.
///
/// # Safety
/// All pointers must be valid; `state` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_state_correlator(
    state: *const MbState,
    a: *const f64,
    b: *const f64,
    out: *mut f64,
) -> MbStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        let (a, b) = (vector(a, "a")?, vector(b, "b")?);
        put(out, s.0.correlator(&a, &b), "out")
    })
}

/// The `n!`-saturating settings.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn mb_strategy_saturating(n: usize, out: *mut *mut MbStrategy) -> MbStatus {
    guard(|| {
        let s = lib(saturating_strategy(n))?;
        put(out, Box::into_raw(Box::new(MbStrategy(s))), "out")
    })
}

/// Strategy from `n` unit vectors per party, each stored as 3 consecutive
/// doubles.
///
/// # Safety
/// `alice` and `bob` must point to `3 n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mb_strategy_new(
    n: usize,
    alice: *const f64,
    bob: *const f64,
    out: *mut *mut MbStrategy,
) -> MbStatus {
    guard(|| {
        let s = lib(Strategy::new(vectors(alice, n, "alice")?, vectors(bob, n, "bob")?))?;
        put(out, Box::into_raw(Box::new(MbStrategy(s))), "out")
    })
}

/// Number of settings per party, or 0 for a null handle.
///
/// # Safety
/// `strategy` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mb_strategy_n(strategy: *const MbStrategy) -> usize {
    strategy.as_ref().map_or(0, |s| s.0.n())
}

/// Writes Alice's (`party = 0`) or Bob's (`party = 1`) settings as `3 n`
/// doubles.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mb_strategy_settings(
    strategy: *const MbStrategy,
    party: u32,
    out: *mut f64,
    len: usize,
) -> MbStatus {
    guard(|| {
        let s = strategy.as_ref().ok_or_else(|| null("strategy"))?;
        let list = match party {
            0 => &s.0.alice,
            1 => &s.0.bob,
            _ => return Err((MbStatus::Domain, format!("party {party} is not 0 or 1"))),
        };
        if out.is_null() {
            return Err(null("out"));
        }
        if len < 3 * list.len() {
            return Err((
                MbStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", 3 * list.len()),
            ));
        }
        for (k, v) in list.iter().enumerate() {
            ptr::copy_nonoverlapping(v.to_array().as_ptr(), out.add(3 * k), 3);
        }
        Ok(())
    })
}

/// `B_n` of a strategy on a state. Factors are copied when `factors` is
/// non-null and `factors_len >= n`.
///
/// # Safety
/// Handles must be live; `factors` must be null or hold `factors_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mb_strategy_evaluate(
    strategy: *const MbStrategy,
    state: *const MbState,
    value: *mut f64,
    factors: *mut f64,
    factors_len: usize,
) -> MbStatus {
    guard(|| {
        let strat = strategy.as_ref().ok_or_else(|| null("strategy"))?;
        let st = state.as_ref().ok_or_else(|| null("state"))?;
        let r = lib(evaluate_strategy(&strat.0, &st.0))?;
        if !factors.is_null() {
            if factors_len < r.factors.len() {
                return Err((
                    MbStatus::BufferTooSmall,
                    format!("need {} factors, got {factors_len}", r.factors.len()),
                ));
            }
            ptr::copy_nonoverlapping(r.factors.as_ptr(), factors, r.factors.len());
        }
        put(value, r.value, "value")
    })
}

/// # Safety
/// `strategy` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mb_strategy_free(strategy: *mut MbStrategy) {
    if !strategy.is_null() {
        drop(Box::from_raw(strategy));
    }
}

/// Classical maximum of `B'_n` by enumeration (`2 <= n <= 12`).
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mb_classical_additive(n: usize, out: *mut i64) -> MbStatus {
    guard(|| put(out, lib(classical_bound_additive(n))?.value, "out"))
}

/// Largest `|B_n|` over deterministic strategies (`2 <= n <= 12`).
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mb_classical_vertex(n: usize, out: *mut i64) -> MbStatus {
    guard(|| put(out, lib(classical_vertex_bound_multiplicative(n))?.value, "out"))
}

/// Best fully deterministic value: its cutoff, natural log (`-inf` for 0)
/// and value as a double (`inf` once it overflows).
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mb_fd_max(n: usize, i_c: *mut usize, ln_value: *mut f64, value: *mut f64) -> MbStatus {
    guard(|| {
        let fd = lib(fd_max(n))?;
        if i_c.is_null() || ln_value.is_null() || value.is_null() {
            return Err(null("output"));
        }
        *i_c = fd.i_c;
        *ln_value = fd.log.log_magnitude;
        *value = fd.to_f64();
        Ok(())
    })
}

/// `FD_n / n!`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mb_fd_ratio(n: usize, out: *mut f64) -> MbStatus {
    guard(|| put(out, lib(fd_ratio(n))?, "out"))
}

/// CHSH bound for a complex local correlation.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mb_chsh_bound(eta_re: f64, eta_im: f64, out: *mut f64) -> MbStatus {
    guard(|| put(out, lib(chsh_bound(Complex64::new(eta_re, eta_im)))?, "out"))
}

/// General and maximally-entangled `B_2` bounds for real `eta`.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mb_b2_bounds(eta: f64, general: *mut f64, maxent: *mut f64) -> MbStatus {
    guard(|| {
        let g = lib(b2_bound_general(eta))?;
        let m = lib(b2_bound_maxent(eta))?;
        put(general, g, "general")?;
        put(maxent, m, "maxent")
    })
}
