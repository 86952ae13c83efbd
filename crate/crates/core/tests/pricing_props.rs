use proptest::prelude::*;
use superhedge::benchmarks::CoverDerivative;
use superhedge::multilinear::hedging_cost;
use superhedge::pricing::{
    horizon_for_tolerance, price_direct, price_recurrence, price_two_stocks, price_two_stocks_unfolded,
    shtarkov_bound, HorizonMethod, LogFactorialTable, PriceRecurrence,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

#[test]
fn recurrence_matches_direct_sum() {
    for periods in 1..=15 {
        for assets in 1..=4 {
            let d = price_direct(periods, assets).unwrap();
            let r = price_recurrence(periods, assets).unwrap();
            assert!(rel(d, r) < 1e-10, "T={periods} m={assets}: {d} vs {r}");
        }
    }
}

#[test]
fn two_stock_formula_matches_recurrence() {
    let mut rec = PriceRecurrence::new(2);
    for periods in 1..=500 {
        let a = price_two_stocks(periods).unwrap();
        assert!(rel(a, rec.price(periods, 2)) < 1e-10, "T={periods}");
        assert!(rel(a, price_two_stocks_unfolded(periods).unwrap()) < 1e-12);
    }
}

#[test]
fn hedging_cost_of_cover_is_price() {
    for periods in 1..=6 {
        for assets in 1..=3 {
            let cost = hedging_cost(&CoverDerivative::new(periods, assets)).unwrap();
            assert!((cost - price_direct(periods, assets).unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn monotone_and_below_type_count() {
    let mut rec = PriceRecurrence::new(5);
    let lf = LogFactorialTable::new(200);
    for periods in 1..=100 {
        for assets in 1..=5 {
            let p = rec.price(periods, assets);
            if assets > 1 {
                assert!(p > rec.price(periods, assets - 1), "strict in m at T={periods}");
            }
            if periods > 1 {
                assert!(p >= rec.price(periods - 1, assets) * (1.0 - 1e-14), "weak in T");
            }
            let classes = lf.log_binomial(periods + assets - 1, assets - 1).exp();
            assert!(p <= classes * (1.0 + 1e-12));
        }
    }
}

#[test]
fn rate_decays_to_zero() {
    let samples = [100, 1_000, 10_000, 30_000, 100_000];
    let rates: Vec<f64> = samples
        .iter()
        .map(|&t| price_two_stocks(t).unwrap().ln() / t as f64)
        .collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]), "{rates:?}");
    assert!(rates[rates.len() - 1] < 1e-4);
}

#[test]
fn shtarkov_dominates() {
    let mut rec = PriceRecurrence::new(5);
    for periods in 1..=200 {
        for assets in 1..=5 {
            let exact = rec.price(periods, assets);
            let bound = shtarkov_bound(periods, assets).unwrap();
            assert!(bound >= exact * (1.0 - 1e-12), "T={periods} m={assets}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn horizons_are_minimal(eps in 0.005f64..1.0, assets in 2usize..=4) {
        let h = horizon_for_tolerance(eps, assets, HorizonMethod::ExactScan).unwrap();
        let mut rec = PriceRecurrence::new(assets);
        prop_assert!(rec.price(h.horizon, assets).ln() / h.horizon as f64 <= eps);
        if h.horizon > 1 {
            let before = h.horizon - 1;
            prop_assert!(rec.price(before, assets).ln() / before as f64 > eps);
        }
        let s = horizon_for_tolerance(eps, assets, HorizonMethod::ShtarkovFixedPoint).unwrap();
        prop_assert!(s.horizon >= h.horizon);
        prop_assert!(shtarkov_bound(s.horizon, assets).unwrap().ln() / s.horizon as f64 <= eps);
    }
}
