//! C ABI over `lowerset`.
//!
//! Objects are opaque handles created by `ls_*_new`/`ls_*_build*` and
//! released with the matching `ls_*_free`. Every fallible call returns an
//! [`LsStatus`]; on failure the message is available from
//! [`ls_last_error_message`] until the next failing call on the same thread.
//! Strings handed out by the library are freed with [`ls_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lowerset::bounds::{tail_norm_with, EvalOptions};
use lowerset::construct::{build_lambda_n_with, build_lambda_with, delta_sequence_with, BuildOptions};
use lowerset::multiindex::LowerSet;
use lowerset::partitions::{exact_lambda_count, DyadicCounts};
use lowerset::table::{Cell, Format, Table};
use lowerset::weights::WeightSequence;
use lowerset::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    NotAdmissible = 4,
    MemoryCap = 5,
    Divergent = 6,
    NotCertified = 7,
    Io = 8,
    Panic = 9,
}

/// An admissible sequence `rho`.
pub struct LsSequence {
    inner: WeightSequence,
}

/// A lower set in canonical order.
pub struct LsLowerSet {
    inner: LowerSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LsStatus {
    match e {
        Error::InvalidArgument(_) | Error::ZeroCoordinate(_) | Error::BelowValidityThreshold { .. } => {
            LsStatus::InvalidArgument
        }
        Error::Parse(_) => LsStatus::Parse,
        Error::NotAdmissible(_)
        | Error::CannotCertifyDivergence { .. }
        | Error::SequenceUndefined(_)
        | Error::NotLower { .. }
        | Error::OutsideY { .. } => LsStatus::NotAdmissible,
        Error::MemoryCap { .. } => LsStatus::MemoryCap,
        Error::TailDiverges(_) | Error::NotInLq(_) | Error::SeriesDiverges(_) => LsStatus::Divergent,
        Error::NotCertified { .. } => LsStatus::NotCertified,
        Error::Io { .. } => LsStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (LsStatus, String)>) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LsStatus::Panic
        }
    }
}

fn lib(e: Error) -> (LsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (LsStatus, String) {
    (LsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (LsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (LsStatus::Parse, format!("{what} is not valid UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (LsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call.
#[no_mangle]
pub extern "C" fn ls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn ls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `poly:s=<s>`, `dyadic:s=<s>` or `custom:file=<path>`.
///
/// # Safety
/// `spec` must be a nul-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_sequence_new(spec: *const c_char, out: *mut *mut LsSequence) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = read_str(spec, "spec")?;
        let seq = WeightSequence::parse_spec(spec).map_err(lib)?;
        *out = Box::into_raw(Box::new(LsSequence { inner: seq }));
        Ok(())
    })
}

/// # Safety
/// `seq` must be null or a handle from [`ls_sequence_new`].
#[no_mangle]
pub unsafe extern "C" fn ls_sequence_free(seq: *mut LsSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

fn build_opts(mem_cap: usize) -> BuildOptions {
    let mut o = BuildOptions::default();
    if mem_cap > 0 {
        o.mem_cap = mem_cap;
    }
    o
}

/// `Lambda(eps, rho)`. `mem_cap = 0` selects the default cap.
///
/// # Safety
/// `seq` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_lambda_build_eps(
    seq: *const LsSequence,
    eps: f64,
    mem_cap: usize,
    out: *mut *mut LsLowerSet,
) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let seq = deref(seq, "seq")?;
        let set = build_lambda_with(&seq.inner, eps, &build_opts(mem_cap)).map_err(lib)?;
        *out = Box::into_raw(Box::new(LsLowerSet { inner: set }));
        Ok(())
    })
}

/// The optimal `n`-term set `Lambda_n`.
///
/// # Safety
/// `seq` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_lambda_build_n(
    seq: *const LsSequence,
    n: usize,
    mem_cap: usize,
    out: *mut *mut LsLowerSet,
) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let seq = deref(seq, "seq")?;
        let (set, _) = build_lambda_n_with(&seq.inner, n, &build_opts(mem_cap)).map_err(lib)?;
        *out = Box::into_raw(Box::new(LsLowerSet { inner: set }));
        Ok(())
    })
}

/// # Safety
/// `set` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_lambda_len(set: *const LsLowerSet, out: *mut usize) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = deref(set, "set")?.inner.len();
        Ok(())
    })
}

/// The `i`-th member (0-based) as `coord:exp` pairs, `"0"` for the zero
/// index. Free the string with [`ls_string_free`].
///
/// # Safety
/// `set` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_lambda_index(set: *const LsLowerSet, i: usize, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let set = deref(set, "set")?;
        let nu = set
            .inner
            .members()
            .get(i)
            .ok_or_else(|| (LsStatus::InvalidArgument, format!("index {i} out of range")))?;
        *out = into_c_string(nu.to_string());
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle from `ls_lambda_build_*`.
#[no_mangle]
pub unsafe extern "C" fn ls_lambda_free(set: *mut LsLowerSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// `#Lambda(2^{-m}, rho*(1))` as a decimal string.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_exact_lambda_count(m: u32, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = into_c_string(exact_lambda_count(m).to_string());
        Ok(())
    })
}

/// CSV with columns `m, cardinality` for `m = 0..=mmax`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_counts_csv(mmax: u32, out: *mut *mut c_char) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if mmax > 2000 {
            return Err((LsStatus::InvalidArgument, "mmax must be <= 2000".into()));
        }
        let mut t = Table::new(["m", "cardinality"]);
        let mut counts = DyadicCounts::new();
        for m in 0..=mmax {
            t.push(vec![Cell::int(m), Cell::int(counts.cumulative(m))]);
        }
        *out = into_c_string(t.render(Format::Csv));
        Ok(())
    })
}

/// `delta_n`, the `n`-th largest `rho^{-nu}` (`n >= 1`).
///
/// # Safety
/// `seq` must be a live handle, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_delta(seq: *const LsSequence, n: usize, mem_cap: usize, out: *mut f64) -> LsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 {
            return Err((LsStatus::InvalidArgument, "n must be >= 1".into()));
        }
        let seq = deref(seq, "seq")?;
        let d = delta_sequence_with(&seq.inner, n, &build_opts(mem_cap)).map_err(lib)?;
        *out = d.get(n).ok_or_else(|| {
            (
                LsStatus::InvalidArgument,
                format!("sequence has fewer than {n} indices"),
            )
        })?;
        Ok(())
    })
}

/// `delta_{n,q}` with its certified absolute error; `q` may be `INFINITY`.
///
/// # Safety
/// `seq` must be a live handle, `value` and `error` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ls_tail_norm(
    seq: *const LsSequence,
    n: usize,
    q: f64,
    value: *mut f64,
    error: *mut f64,
) -> LsStatus {
    guard(|| {
        if value.is_null() || error.is_null() {
            return Err(null("value/error"));
        }
        let seq = deref(seq, "seq")?;
        let t = tail_norm_with(&seq.inner, n, q, &EvalOptions::default()).map_err(lib)?;
        *value = t.value.value;
        *error = t.value.error;
        Ok(())
    })
}
