//! C interface to `cqconverse`.
//!
//! Channels live behind an opaque `CqcChannel` handle created by one of the
//! `cqc_channel_*` constructors and released with `cqc_channel_free`. Every
//! other call returns a `CqcStatus` and writes its results through out
//! pointers. On failure the message for the calling thread is available from
//! `cqc_last_error_message` until the next failing call.
//!
//! Priors are passed as `(pointer, length)` and renormalized; codebook letters
//! are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cqconverse::bounds::{default_s_grid, lemma1_bound, ConverseEngine};
use cqconverse::channel::{Codebook, CqChannel, DensityOperator, Prior};
use cqconverse::hermitian::{HermitianMatrix, C64};
use cqconverse::info::{e0, mutual_info};
use cqconverse::optimizer::{capacity, min_e0_over_prior, OptimizerConfig, OptimizerResult};
use cqconverse::{io, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CqcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotPsd = 3,
    DimensionLimit = 4,
    /// Results were written but the optimizer could not certify them.
    NotConverged = 5,
    Io = 6,
    Panic = 7,
}

/// Opaque channel handle.
pub struct CqcChannel {
    engine: ConverseEngine,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CqcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NotConverged { .. } | Error::OptimizerNotConverged { .. } => CqcStatus::NotConverged,
            Error::NotPsd { .. } => CqcStatus::NotPsd,
            Error::DimensionLimit { .. } => CqcStatus::DimensionLimit,
            Error::Io { .. } => CqcStatus::Io,
            _ => CqcStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CqcStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CqcStatus::InvalidInput, msg.into())
}

fn guard(f: impl FnOnce() -> Result<CqcStatus, Failure>) -> CqcStatus {
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
            CqcStatus::Panic
        }
    }
}

unsafe fn channel_ref<'a>(ch: *const CqcChannel) -> Result<&'a CqcChannel, Failure> {
    ch.as_ref().ok_or_else(|| null("channel"))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn prior(ch: &CqcChannel, probs: *const f64, len: usize) -> Result<Prior, Failure> {
    let a = ch.engine.channel().alphabet_size();
    if len != a {
        return Err(invalid(format!("prior has {len} entries, channel has {a} letters")));
    }
    Ok(Prior::new(slice(probs, len, "prior")?.to_vec())?)
}

unsafe fn write_prior(out: *mut f64, result: &OptimizerResult) {
    if !out.is_null() {
        let p = result.pi_star.probs();
        std::slice::from_raw_parts_mut(out, p.len()).copy_from_slice(p);
    }
}

unsafe fn emit(out: *mut *mut CqcChannel, ch: CqChannel) -> Result<CqcStatus, Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    let engine = ConverseEngine::new(ch, OptimizerConfig::default())?;
    out.write(Box::into_raw(Box::new(CqcChannel { engine })));
    Ok(CqcStatus::Ok)
}

/// Parses a channel from JSON text (`{"dim": d, "states": [...]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cqc_channel_from_json(json: *const c_char, out: *mut *mut CqcChannel) -> CqcStatus {
    guard(|| emit(out, io::parse_channel(text(json, "json")?)?))
}

/// Loads a channel file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cqc_channel_load(path: *const c_char, out: *mut *mut CqcChannel) -> CqcStatus {
    guard(|| emit(out, io::load_channel(Path::new(text(path, "path")?))?))
}

/// Builds a channel from `count` row-major `dim x dim` matrices laid out
/// back to back. `im` may be null for real states.
///
/// # Safety
/// `re` (and `im` when non-null) must hold `count * dim * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn cqc_channel_new(
    dim: usize,
    count: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut CqcChannel,
) -> CqcStatus {
    guard(|| {
        if dim == 0 || count == 0 {
            return Err(invalid("dim and count must be positive"));
        }
        let block = dim.checked_mul(dim).ok_or_else(|| invalid("dim too large"))?;
        let len = block.checked_mul(count).ok_or_else(|| invalid("count too large"))?;
        let re = slice(re, len, "re")?;
        let im = if im.is_null() { None } else { Some(slice(im, len, "im")?) };
        let states = (0..count)
            .map(|k| {
                let data = (k * block..(k + 1) * block)
                    .map(|i| C64::new(re[i], im.map_or(0.0, |m| m[i])))
                    .collect();
                let m = HermitianMatrix::new_checked(dim, data)
                    .map_err(|e| Failure::from(e).with_context(k))?;
                DensityOperator::new(m).map_err(|e| Failure::from(e).with_context(k))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        emit(out, CqChannel::new(states)?)
    })
}

impl Failure {
    fn with_context(self, state: usize) -> Self {
        Failure(self.0, format!("state {state}: {}", self.1))
    }
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `ch` must come from a `cqc_channel_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn cqc_channel_free(ch: *mut CqcChannel) {
    if !ch.is_null() {
        drop(Box::from_raw(ch));
    }
}

/// # Safety
/// `ch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cqc_channel_dim(ch: *const CqcChannel, out: *mut usize) -> CqcStatus {
    guard(|| {
        write(out, channel_ref(ch)?.engine.channel().dim())?;
        Ok(CqcStatus::Ok)
    })
}

/// # Safety
/// `ch` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cqc_channel_alphabet_size(ch: *const CqcChannel, out: *mut usize) -> CqcStatus {
    guard(|| {
        write(out, channel_ref(ch)?.engine.channel().alphabet_size())?;
        Ok(CqcStatus::Ok)
    })
}

/// Mutual information `I(π)` in nats.
///
/// # Safety
/// `prior_probs` must hold `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn cqc_mutual_info(
    ch: *const CqcChannel,
    prior_probs: *const f64,
    len: usize,
    out: *mut f64,
) -> CqcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        let p = prior(ch, prior_probs, len)?;
        write(out, mutual_info(ch.engine.channel(), &p)?)?;
        Ok(CqcStatus::Ok)
    })
}

/// `E₀(s, π)` for `s ∈ (−1, 0]`.
///
/// # Safety
/// `prior_probs` must hold `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn cqc_e0(
    ch: *const CqcChannel,
    prior_probs: *const f64,
    len: usize,
    s: f64,
    out: *mut f64,
) -> CqcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        let p = prior(ch, prior_probs, len)?;
        write(out, e0(ch.engine.channel(), &p, s)?.value)?;
        Ok(CqcStatus::Ok)
    })
}

/// Capacity in nats. `out_prior` may be null; otherwise it receives the
/// optimal prior (alphabet size entries).
///
/// # Safety
/// `out` must be writable; `out_prior`, when non-null, must have room for
/// the alphabet size.
#[no_mangle]
pub unsafe extern "C" fn cqc_capacity(ch: *const CqcChannel, out: *mut f64, out_prior: *mut f64) -> CqcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        let result = capacity(ch.engine.channel(), &OptimizerConfig::default())?;
        write(out, result.value)?;
        write_prior(out_prior, &result);
        Ok(converged(&result))
    })
}

/// `min_π E₀(s, π)`. `out_prior` may be null.
///
/// # Safety
/// As for `cqc_capacity`.
#[no_mangle]
pub unsafe extern "C" fn cqc_min_e0(ch: *const CqcChannel, s: f64, out: *mut f64, out_prior: *mut f64) -> CqcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        let opt = min_e0_over_prior(ch.engine.channel(), s, &OptimizerConfig::default())?;
        write(out, opt.value)?;
        write_prior(out_prior, &opt.inner);
        Ok(converged(&opt.inner))
    })
}

fn converged(result: &OptimizerResult) -> CqcStatus {
    if result.converged {
        CqcStatus::Ok
    } else {
        set_error(format!(
            "prior optimization stopped after {} iterations (stationarity residual {:e})",
            result.iterations, result.kkt_residual
        ));
        CqcStatus::NotConverged
    }
}

/// Strong-converse exponent `sup_s [−sR + min_π E₀(s, π)]` at `rate` (nats)
/// over the default grid. `out_s_star` may be null.
///
/// # Safety
/// `ch` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cqc_sc_exponent(
    ch: *const CqcChannel,
    rate: f64,
    out: *mut f64,
    out_s_star: *mut f64,
) -> CqcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        let sc = ch.engine.sc_exponent(rate, &default_s_grid())?;
        write(out, sc.exponent)?;
        if !out_s_star.is_null() {
            out_s_star.write(sc.s_star);
        }
        Ok(CqcStatus::Ok)
    })
}

/// Error lower bound `1 − exp(−n(−sR + min_π E₀(s, π)))` for block length `n`.
///
/// # Safety
/// `ch` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cqc_theorem1_bound(
    ch: *const CqcChannel,
    n: usize,
    rate: f64,
    s: f64,
    out: *mut f64,
) -> CqcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        write(out, ch.engine.theorem1_bound(n, rate, s)?.value)?;
        Ok(CqcStatus::Ok)
    })
}

/// Per-codebook error lower bound. `words` holds `m` codewords of length `n`
/// back to back, letters 0-based.
///
/// # Safety
/// `words` must hold `m * n` entries and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn cqc_lemma1_bound(
    ch: *const CqcChannel,
    n: usize,
    words: *const usize,
    m: usize,
    beta: f64,
    out: *mut f64,
) -> CqcStatus {
    guard(|| {
        let ch = channel_ref(ch)?;
        if n == 0 || m == 0 {
            return Err(invalid("n and m must be positive"));
        }
        let len = n.checked_mul(m).ok_or_else(|| invalid("codebook too large"))?;
        let letters = slice(words, len, "words")?;
        let cb = Codebook::new(n, letters.chunks(n).map(<[usize]>::to_vec).collect())?;
        write(out, lemma1_bound(ch.engine.channel(), &cb, beta)?.value)?;
        Ok(CqcStatus::Ok)
    })
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cqc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cqc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
