//! C ABI for the `superhedge` library.
//!
//! Every fallible function returns an [`ShStatus`] and writes results through
//! out-pointers. On failure, [`sh_last_error_message`] describes the error for
//! the calling thread. Handles are opaque and must be released with their
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use superhedge::benchmarks::best_crp;
use superhedge::error::Error;
use superhedge::market::{crp_wealth, PortfolioVector, ReturnMatrix};
use superhedge::multilinear::{prior_cover_ordentlich, prior_cover_uniform, MarginalTable, SigmaTable};
use superhedge::pricing::{
    horizon_for_tolerance, price_direct, price_recurrence, price_two_stocks, shtarkov_bound, years_needed,
    HorizonMethod,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidReturns = 4,
    BudgetExceeded = 5,
    UndefinedPayoff = 6,
    HorizonReached = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShPriceMethod {
    Direct = 0,
    Recurrence = 1,
    TwoStock = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShHorizonMethod {
    Exact = 0,
    Shtarkov = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShPrior {
    CoverOrdentlich = 0,
    Uniform = 1,
}

/// Opaque `T x m` matrix of gross returns.
pub struct ShReturnMatrix(ReturnMatrix);

/// Opaque online universal portfolio for a fixed horizon.
pub struct ShUniversal {
    marginals: MarginalTable,
    sigma: SigmaTable,
    periods: usize,
    assets: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ShStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::StageMismatch { .. } => ShStatus::DimensionMismatch,
        Error::InvalidReturns(_) | Error::NonPositivePrice { .. } => ShStatus::InvalidReturns,
        Error::BudgetExceeded { .. } => ShStatus::BudgetExceeded,
        Error::UndefinedPayoff | Error::ZeroDenominator(_) => ShStatus::UndefinedPayoff,
        _ => ShStatus::InvalidArgument,
    }
}

fn fail(status: ShStatus, message: impl Into<String>) -> ShStatus {
    set_last_error(message.into());
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), ShStatus>) -> ShStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ShStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(ShStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: superhedge::Result<T>) -> Result<T, ShStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), ShStatus> {
    if p.is_null() {
        Err(fail(ShStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `p` must be null or point to `len` readable values.
unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], ShStatus> {
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `periods * assets` row-major returns into a new matrix handle.
///
/// # Safety
/// `data` must point to `periods * assets` readable doubles and `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sh_returns_new(
    data: *const f64,
    periods: usize,
    assets: usize,
    out: *mut *mut ShReturnMatrix,
) -> ShStatus {
    guard(|| {
        non_null(out, "out")?;
        let len = periods
            .checked_mul(assets)
            .ok_or_else(|| fail(ShStatus::InvalidArgument, "matrix size overflows"))?;
        let values = slice(data, len, "data")?.to_vec();
        let x = lift(ReturnMatrix::from_flat(values, assets))?;
        *out = Box::into_raw(Box::new(ShReturnMatrix(x)));
        Ok(())
    })
}

/// # Safety
/// `x` must be null or a handle from [`sh_returns_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sh_returns_free(x: *mut ShReturnMatrix) {
    if !x.is_null() {
        drop(Box::from_raw(x));
    }
}

/// # Safety
/// `x` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sh_returns_periods(x: *const ShReturnMatrix) -> usize {
    x.as_ref().map_or(0, |x| x.0.periods())
}

/// # Safety
/// `x` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sh_returns_assets(x: *const ShReturnMatrix) -> usize {
    x.as_ref().map_or(0, |x| x.0.assets())
}

/// Superhedging price `p(T, m)` of the best-CRP payoff.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sh_price(periods: usize, assets: usize, method: ShPriceMethod, out: *mut f64) -> ShStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(match method {
            ShPriceMethod::Direct => price_direct(periods, assets),
            ShPriceMethod::Recurrence => price_recurrence(periods, assets),
            ShPriceMethod::TwoStock if assets == 2 => price_two_stocks(periods),
            ShPriceMethod::TwoStock => Err(Error::InvalidArgument("two-stock method needs m = 2".into())),
        })?;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sh_shtarkov_bound(periods: usize, assets: usize, out: *mut f64) -> ShStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lift(shtarkov_bound(periods, assets))?;
        Ok(())
    })
}

fn horizon_method(m: ShHorizonMethod) -> HorizonMethod {
    match m {
        ShHorizonMethod::Exact => HorizonMethod::ExactScan,
        ShHorizonMethod::Shtarkov => HorizonMethod::ShtarkovFixedPoint,
    }
}

/// Smallest horizon with `log p(T, m) / T <= eps`. `out_rate` may be null.
///
/// # Safety
/// `out_horizon` must be valid; `out_rate` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn sh_horizon(
    eps: f64,
    assets: usize,
    method: ShHorizonMethod,
    out_horizon: *mut usize,
    out_rate: *mut f64,
) -> ShStatus {
    guard(|| {
        non_null(out_horizon, "out_horizon")?;
        let h = lift(horizon_for_tolerance(eps, assets, horizon_method(method)))?;
        *out_horizon = h.horizon;
        if !out_rate.is_null() {
            *out_rate = h.achieved_rate;
        }
        Ok(())
    })
}

/// Years needed at `frequency` rebalances per year. `out_periods` may be null.
///
/// # Safety
/// `out_years` must be valid; `out_periods` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn sh_years_needed(
    eps: f64,
    assets: usize,
    frequency: u32,
    out_years: *mut f64,
    out_periods: *mut usize,
) -> ShStatus {
    guard(|| {
        non_null(out_years, "out_years")?;
        let y = lift(years_needed(eps, assets, frequency))?;
        *out_years = y.years;
        if !out_periods.is_null() {
            *out_periods = y.horizon.horizon;
        }
        Ok(())
    })
}

/// Best constant-rebalanced portfolio in hindsight. Writes `assets` weights
/// to `out_weights` and the wealth to `out_value`.
///
/// # Safety
/// `x` must be live; `out_weights` must hold `assets` doubles; `out_value`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn sh_best_crp(
    x: *const ShReturnMatrix,
    tolerance: f64,
    out_weights: *mut f64,
    assets: usize,
    out_value: *mut f64,
) -> ShStatus {
    guard(|| {
        non_null(x, "x")?;
        non_null(out_weights, "out_weights")?;
        non_null(out_value, "out_value")?;
        let x = &(*x).0;
        lift(Error::check_assets(x.assets(), assets))?;
        let result = best_crp(x, tolerance);
        std::slice::from_raw_parts_mut(out_weights, assets).copy_from_slice(&result.maximizer);
        *out_value = result.value;
        Ok(())
    })
}

/// Wealth of the constant-rebalanced portfolio `weights` on `x`.
///
/// # Safety
/// `x` must be live; `weights` must hold `assets` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sh_crp_wealth(
    x: *const ShReturnMatrix,
    weights: *const f64,
    assets: usize,
    out: *mut f64,
) -> ShStatus {
    guard(|| {
        non_null(x, "x")?;
        non_null(out, "out")?;
        let c = lift(PortfolioVector::new(slice(weights, assets, "weights")?.to_vec()))?;
        *out = lift(crp_wealth(&c, &(*x).0))?;
        Ok(())
    })
}

/// Creates the horizon-`periods` replicating strategy for a symmetric prior.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sh_universal_new(
    periods: usize,
    assets: usize,
    prior: ShPrior,
    out: *mut *mut ShUniversal,
) -> ShStatus {
    guard(|| {
        non_null(out, "out")?;
        let alpha = lift(match prior {
            ShPrior::CoverOrdentlich => prior_cover_ordentlich(periods, assets),
            ShPrior::Uniform => prior_cover_uniform(periods, assets),
        })?;
        let marginals = lift(MarginalTable::new(&alpha))?;
        let sigma = lift(SigmaTable::new(assets))?;
        *out = Box::into_raw(Box::new(ShUniversal {
            marginals,
            sigma,
            periods,
            assets,
        }));
        Ok(())
    })
}

/// # Safety
/// `u` must be null or a handle from [`sh_universal_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sh_universal_free(u: *mut ShUniversal) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Number of return rows observed so far.
///
/// # Safety
/// `u` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sh_universal_stage(u: *const ShUniversal) -> usize {
    u.as_ref().map_or(0, |u| u.sigma.stage())
}

/// Portfolio to hold for the next period. Fails with `HorizonReached` once
/// `periods` rows have been observed.
///
/// # Safety
/// `u` must be live; `out_weights` must hold `assets` doubles.
#[no_mangle]
pub unsafe extern "C" fn sh_universal_portfolio(
    u: *const ShUniversal,
    out_weights: *mut f64,
    assets: usize,
) -> ShStatus {
    guard(|| {
        non_null(u, "u")?;
        non_null(out_weights, "out_weights")?;
        let u = &*u;
        lift(Error::check_assets(u.assets, assets))?;
        if u.sigma.stage() >= u.periods {
            return Err(fail(ShStatus::HorizonReached, "all periods observed"));
        }
        let p = u.marginals.portfolio(&u.sigma);
        std::slice::from_raw_parts_mut(out_weights, assets).copy_from_slice(p.portfolio.weights());
        Ok(())
    })
}

/// Records one period of gross returns.
///
/// # Safety
/// `u` must be live; `row` must hold `assets` doubles.
#[no_mangle]
pub unsafe extern "C" fn sh_universal_update(u: *mut ShUniversal, row: *const f64, assets: usize) -> ShStatus {
    guard(|| {
        non_null(u, "u")?;
        let u = &mut *u;
        lift(Error::check_assets(u.assets, assets))?;
        if u.sigma.stage() >= u.periods {
            return Err(fail(ShStatus::HorizonReached, "all periods observed"));
        }
        let row = slice(row, assets, "row")?;
        if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || row.iter().all(|&v| v == 0.0) {
            return Err(fail(ShStatus::InvalidReturns, "returns must be nonnegative, finite and not all zero"));
        }
        u.sigma = lift(u.sigma.advance(row))?;
        Ok(())
    })
}

/// Wealth of the strategy so far, from an initial wealth of 1.
///
/// # Safety
/// `u` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sh_universal_wealth(u: *const ShUniversal, out: *mut f64) -> ShStatus {
    guard(|| {
        non_null(u, "u")?;
        non_null(out, "out")?;
        *out = (*u).marginals.log_wealth(&(*u).sigma).exp();
        Ok(())
    })
}
