use std::ffi::CStr;
use std::ptr;

use superhedge_ffi::*;

fn last_error() -> String {
    let p = sh_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn prices_and_bounds() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(sh_price(2, 2, ShPriceMethod::Direct, &mut out), ShStatus::Ok);
        assert!((out - 2.5).abs() < 1e-12);
        assert_eq!(sh_price(3, 2, ShPriceMethod::TwoStock, &mut out), ShStatus::Ok);
        assert!((out - 26.0 / 9.0).abs() < 1e-12);
        assert_eq!(sh_price(1, 7, ShPriceMethod::Recurrence, &mut out), ShStatus::Ok);
        assert_eq!(out, 7.0);
        assert_eq!(sh_shtarkov_bound(1, 2, &mut out), ShStatus::Ok);
        assert!((out - 3.2533141373155).abs() < 1e-12);
    }
    assert!(sh_last_error_message().is_null());
}

#[test]
fn errors_set_status_and_message() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(sh_price(3, 4, ShPriceMethod::TwoStock, &mut out), ShStatus::InvalidArgument);
        assert!(last_error().contains("two-stock"));
        assert_eq!(sh_price(3000, 6, ShPriceMethod::Direct, &mut out), ShStatus::BudgetExceeded);
        assert_eq!(sh_price(2, 2, ShPriceMethod::Direct, ptr::null_mut()), ShStatus::NullPointer);
        assert!(last_error().contains("out"));
        let mut h = 0usize;
        assert_eq!(sh_horizon(-1.0, 2, ShHorizonMethod::Exact, &mut h, ptr::null_mut()), ShStatus::InvalidArgument);
    }
}

#[test]
fn horizons() {
    let (mut h, mut rate, mut years) = (0usize, 0.0, 0.0);
    unsafe {
        assert_eq!(sh_horizon(0.01, 2, ShHorizonMethod::Shtarkov, &mut h, &mut rate), ShStatus::Ok);
        assert_eq!(h, 320);
        assert!(rate <= 0.01);
        assert_eq!(sh_horizon(0.7, 2, ShHorizonMethod::Exact, &mut h, ptr::null_mut()), ShStatus::Ok);
        assert_eq!(h, 1);
        assert_eq!(sh_years_needed(0.01, 2, 252, &mut years, &mut h), ShStatus::Ok);
        assert!((years - 621.0).abs() < 6.21);
    }
}

#[test]
fn matrices_and_crps() {
    let data = [2.0, 1.0, 0.5, 1.0, 2.0, 1.0, 0.5, 1.0];
    let mut x = ptr::null_mut();
    unsafe {
        assert_eq!(sh_returns_new(data.as_ptr(), 4, 2, &mut x), ShStatus::Ok);
        assert_eq!(sh_returns_periods(x), 4);
        assert_eq!(sh_returns_assets(x), 2);
        let mut wealth = 0.0;
        let half = [0.5, 0.5];
        assert_eq!(sh_crp_wealth(x, half.as_ptr(), 2, &mut wealth), ShStatus::Ok);
        assert!((wealth - 1.265625).abs() < 1e-12);
        let mut weights = [0.0; 2];
        let mut value = 0.0;
        assert_eq!(sh_best_crp(x, 1e-12, weights.as_mut_ptr(), 2, &mut value), ShStatus::Ok);
        assert!((weights[0] - 0.5).abs() < 1e-6);
        assert!((value - 1.265625).abs() < 1e-12);
        let mut wrong = [0.0; 3];
        assert_eq!(sh_best_crp(x, 1e-12, wrong.as_mut_ptr(), 3, &mut value), ShStatus::DimensionMismatch);
        sh_returns_free(x);
        sh_returns_free(ptr::null_mut());

        let bad = [1.0, -1.0];
        assert_eq!(sh_returns_new(bad.as_ptr(), 1, 2, &mut x), ShStatus::InvalidReturns);
    }
}

#[test]
fn universal_handle_tracks_wealth() {
    let rows = [[2.0, 1.0], [0.5, 1.0], [2.0, 1.0], [0.5, 1.0]];
    let mut u = ptr::null_mut();
    unsafe {
        assert_eq!(sh_universal_new(4, 2, ShPrior::CoverOrdentlich, &mut u), ShStatus::Ok);
        let mut expected = 1.0;
        for row in &rows {
            let mut w = [0.0; 2];
            assert_eq!(sh_universal_portfolio(u, w.as_mut_ptr(), 2), ShStatus::Ok);
            assert!((w[0] + w[1] - 1.0).abs() < 1e-12);
            expected *= w[0] * row[0] + w[1] * row[1];
            assert_eq!(sh_universal_update(u, row.as_ptr(), 2), ShStatus::Ok);
            let mut wealth = 0.0;
            assert_eq!(sh_universal_wealth(u, &mut wealth), ShStatus::Ok);
            assert!((wealth - expected).abs() < 1e-12 * expected);
        }
        assert_eq!(sh_universal_stage(u), 4);
        let mut w = [0.0; 2];
        assert_eq!(sh_universal_portfolio(u, w.as_mut_ptr(), 2), ShStatus::HorizonReached);
        assert_eq!(sh_universal_update(u, rows[0].as_ptr(), 2), ShStatus::HorizonReached);
        sh_universal_free(u);
    }
}

#[test]
fn universal_superhedges_best_crp_at_horizon() {
    let rows = [[1.3, 0.9, 1.0], [0.7, 1.2, 1.0], [1.1, 1.1, 0.6]];
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let (mut u, mut x) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(sh_universal_new(3, 3, ShPrior::Uniform, &mut u), ShStatus::Ok);
        for row in &rows {
            assert_eq!(sh_universal_update(u, row.as_ptr(), 3), ShStatus::Ok);
        }
        let mut wealth = 0.0;
        sh_universal_wealth(u, &mut wealth);
        assert_eq!(sh_returns_new(flat.as_ptr(), 3, 3, &mut x), ShStatus::Ok);
        let (mut w, mut best) = ([0.0; 3], 0.0);
        assert_eq!(sh_best_crp(x, 1e-12, w.as_mut_ptr(), 3, &mut best), ShStatus::Ok);
        // uniform prior deposit C(T+m-1, m-1) = 10
        assert!(10.0 * wealth >= best - 1e-12);
        sh_returns_free(x);
        sh_universal_free(u);
    }
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/superhedge.h");
    for name in [
        "sh_last_error_message",
        "sh_returns_new",
        "sh_returns_free",
        "sh_price",
        "sh_shtarkov_bound",
        "sh_horizon",
        "sh_years_needed",
        "sh_best_crp",
        "sh_crp_wealth",
        "sh_universal_new",
        "sh_universal_portfolio",
        "sh_universal_update",
        "sh_universal_wealth",
        "sh_universal_free",
        "typedef struct ShUniversal ShUniversal",
        "SH_STATUS_BUDGET_EXCEEDED = 5",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
