//! C interface to the auctionlab library.
//!
//! Values are drawn uniformly from `[0, 100]`. Every function returns an
//! [`AlStatus`]; on failure the message is available through
//! [`al_last_error_message`] on the same thread. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use auctionlab::dist::Uniform;
use auctionlab::equilibrium::{
    csp_bid, fp_bid, seller_best_response, solve_ncsp_equilibrium, BidFunction, NcspSolverOptions,
    SellerParams,
};
use auctionlab::rationality::builders::{ConstraintBuilder, FpBuilder, NcspBuilder};
use auctionlab::rationality::{hmi, HmiOptions, Observation, SubjectData};
use auctionlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    NonConvergence = 3,
    Solver = 4,
    Size = 5,
    Identification = 6,
    UndefinedStatistic = 7,
    Singular = 8,
    DegenerateObservation = 9,
    Parse = 10,
    Io = 11,
    Panic = 12,
}

impl From<&Error> for AlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => AlStatus::Domain,
            Error::NonConvergence { .. } => AlStatus::NonConvergence,
            Error::Solver(_) => AlStatus::Solver,
            Error::Size { .. } => AlStatus::Size,
            Error::Identification(_) => AlStatus::Identification,
            Error::UndefinedStatistic(_) => AlStatus::UndefinedStatistic,
            Error::Singular(_) => AlStatus::Singular,
            Error::DegenerateObservation { .. } => AlStatus::DegenerateObservation,
            Error::Parse { .. } => AlStatus::Parse,
            Error::Io(_) => AlStatus::Io,
        }
    }
}

/// A tabulated bid function.
pub struct AlBidFunction {
    inner: BidFunction,
}

/// One bidder's value/bid observations in round order.
pub struct AlSubject {
    inner: SubjectData,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
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

/// Runs `f`, recording any error or panic for `al_last_error_message`.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AlStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer passed for {what}"));
            AlStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            AlStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            AlStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    // SAFETY: the caller guarantees `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or(Fail::Null(what))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length plus one, or 0 when
/// there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn al_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn al_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Risk-neutral first-price equilibrium bid with `n` bidders.
///
/// # Safety
/// `out_bid` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_fp_bid(theta: f64, n: u32, out_bid: *mut f64) -> AlStatus {
    guard(|| {
        let o = out(out_bid, "out_bid")?;
        *o = fp_bid(theta, &Uniform::standard(), n as usize)?;
        Ok(())
    })
}

/// Dominant-strategy bid of the credible second-price auction.
#[no_mangle]
pub extern "C" fn al_csp_bid(theta: f64) -> f64 {
    csp_bid(theta)
}

/// Seller's best response to two bids: the higher bidder wins (ties go to
/// slot 0) at `min(b_high, b_low + gamma)`.
///
/// # Safety
/// Output pointers must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_seller_best_response(
    bid1: f64,
    bid2: f64,
    gamma: f64,
    out_winner: *mut u32,
    out_price: *mut f64,
) -> AlStatus {
    guard(|| {
        let w = out(out_winner, "out_winner")?;
        let p = out(out_price, "out_price")?;
        let d = seller_best_response(&[bid1, bid2], SellerParams::new(gamma)?)?;
        *w = d.winner_index as u32;
        *p = d.price;
        Ok(())
    })
}

/// Solves the symmetric NCSP equilibrium. `grid_size = 0` and `tol <= 0`
/// select the defaults (1001 points, 1e-8).
///
/// # Safety
/// `out_fn` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_solve_ncsp(
    gamma: f64,
    n: u32,
    grid_size: usize,
    tol: f64,
    out_fn: *mut *mut AlBidFunction,
) -> AlStatus {
    guard(|| {
        let o = out(out_fn, "out_fn")?;
        let mut opts = NcspSolverOptions::default();
        if grid_size > 0 {
            opts.grid_size = grid_size;
        }
        if tol > 0.0 {
            opts.tol = tol;
        }
        let f = solve_ncsp_equilibrium(
            &Uniform::standard(),
            n as usize,
            SellerParams::new(gamma)?,
            opts,
        )?;
        *o = Box::into_raw(Box::new(AlBidFunction { inner: f }));
        Ok(())
    })
}

/// Number of grid points; 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn al_bidfn_len(f: *const AlBidFunction) -> usize {
    f.as_ref().map_or(0, |f| f.inner.grid().len())
}

/// Bid at `theta`, interpolated linearly.
///
/// # Safety
/// `f` must be null or a live handle; `out_bid` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_bidfn_eval(
    f: *const AlBidFunction,
    theta: f64,
    out_bid: *mut f64,
) -> AlStatus {
    guard(|| {
        let f = f.as_ref().ok_or(Fail::Null("f"))?;
        let o = out(out_bid, "out_bid")?;
        *o = f.inner.eval(theta);
        Ok(())
    })
}

/// Copies the grid and bids into caller buffers of length `len`, which must
/// equal `al_bidfn_len(f)`.
///
/// # Safety
/// Buffers must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn al_bidfn_copy(
    f: *const AlBidFunction,
    thetas: *mut f64,
    bids: *mut f64,
    len: usize,
) -> AlStatus {
    guard(|| {
        let f = f.as_ref().ok_or(Fail::Null("f"))?;
        if thetas.is_null() || bids.is_null() {
            return Err(Fail::Null("output buffers"));
        }
        let n = f.inner.grid().len();
        if len != n {
            return Err(
                Error::Domain(format!("buffer length {len}, bid function has {n} points")).into(),
            );
        }
        std::ptr::copy_nonoverlapping(f.inner.grid().as_ptr(), thetas, n);
        std::ptr::copy_nonoverlapping(f.inner.bids().as_ptr(), bids, n);
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn al_bidfn_free(f: *mut AlBidFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Creates a subject from `len` value/bid pairs in round order.
///
/// # Safety
/// `thetas` and `bids` must be valid for `len` reads; `out_subject` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_subject_new(
    thetas: *const f64,
    bids: *const f64,
    len: usize,
    out_subject: *mut *mut AlSubject,
) -> AlStatus {
    guard(|| {
        let o = out(out_subject, "out_subject")?;
        if len > 0 && (thetas.is_null() || bids.is_null()) {
            return Err(Fail::Null("thetas/bids"));
        }
        let obs = (0..len)
            .map(|i| Observation::new(*thetas.add(i), *bids.add(i)))
            .collect();
        let s = SubjectData::new(obs)?;
        *o = Box::into_raw(Box::new(AlSubject { inner: s }));
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn al_subject_free(s: *mut AlSubject) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

unsafe fn run_hmi(
    s: *const AlSubject,
    builder: Result<Arc<dyn ConstraintBuilder>, Error>,
    out_hmi: *mut f64,
    out_kept: *mut usize,
) -> AlStatus {
    guard(|| {
        let s = s.as_ref().ok_or(Fail::Null("subject"))?;
        let h = out(out_hmi, "out_hmi")?;
        let r = hmi(&s.inner, &*builder?, HmiOptions::default())?;
        *h = r.hmi;
        if let Some(k) = out_kept.as_mut() {
            *k = r.max_consistent_size;
        }
        Ok(())
    })
}

/// Houtman–Maks index under the first-price test with two bidders holding
/// equilibrium beliefs. `out_kept` (optional) receives the size of the largest
/// consistent subset.
///
/// # Safety
/// `s` must be a live handle; outputs null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_hmi_fp(
    s: *const AlSubject,
    out_hmi: *mut f64,
    out_kept: *mut usize,
) -> AlStatus {
    let b = FpBuilder::equilibrium(Arc::new(Uniform::standard()), 2)
        .map(|b| Arc::new(b) as Arc<dyn ConstraintBuilder>);
    run_hmi(s, b, out_hmi, out_kept)
}

/// Houtman–Maks index under the NCSP test with seller tolerance `gamma`.
///
/// # Safety
/// `s` must be a live handle; outputs null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn al_hmi_ncsp(
    s: *const AlSubject,
    gamma: f64,
    out_hmi: *mut f64,
    out_kept: *mut usize,
) -> AlStatus {
    let b = NcspBuilder::equilibrium(Arc::new(Uniform::standard()), 2, gamma)
        .map(|b| Arc::new(b) as Arc<dyn ConstraintBuilder>);
    run_hmi(s, b, out_hmi, out_kept)
}
