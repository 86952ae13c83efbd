mod common;

use common::{assert_close, random_returns, rng, simplex_point, varied_returns};
use proptest::prelude::*;
use rand::Rng;
use superhedge::benchmarks::{cover_derivative, CoverDerivative, PayoffEvaluator, DEFAULT_TOLERANCE};
use superhedge::market::{wealth_of_strategy, Blend, ReturnMatrix};
use superhedge::multilinear::{
    for_each_tuple, hedging_cost, majorant_coefficients, marginal_alpha, prior_cover_ordentlich, prior_cover_uniform,
    replicate_from_payoff, replicating_portfolio, sigma_advance, symmetric_portfolio, verify_hedgeable,
    wealth_of_coefficients, MarginalTable, MultilinearCoefficients, MultilinearPayoff, ReplicatingStrategy,
    SigmaTable, TypeIndexer, TypeVector,
};

fn random_dense(r: &mut impl Rng, periods: usize, assets: usize) -> MultilinearCoefficients {
    let n = assets.pow(periods as u32);
    let mut w = simplex_point(r, n);
    // some exact zeros exercise degenerate prefixes
    if r.gen_bool(0.3) {
        let k = r.gen_range(0..n);
        w[k] = 0.0;
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
    }
    MultilinearCoefficients::dense(periods, assets, w, r.gen_range(0.5..5.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn replication_is_exact(seed in any::<u64>(), periods in 1usize..=6, assets in 2usize..=3) {
        let mut r = rng(seed);
        let alpha = random_dense(&mut r, periods, assets);
        let x = varied_returns(&mut r, periods, assets);
        let target = wealth_of_coefficients(&alpha, &x).unwrap();
        let theta = ReplicatingStrategy::new(alpha.clone()).unwrap();
        let w = wealth_of_strategy(&theta, &x).unwrap();
        prop_assert!((alpha.scale() * w - alpha.scale() * target).abs() <= 1e-10 * alpha.scale() * target.max(1e-300));
    }

    #[test]
    fn majorant_dominates_cover(seed in any::<u64>(), periods in 1usize..=6, assets in 2usize..=3) {
        let mut r = rng(seed);
        let d = CoverDerivative::new(periods, assets);
        let alpha = majorant_coefficients(&d).unwrap();
        let price = alpha.scale();
        let theta = ReplicatingStrategy::new(alpha).unwrap();
        for _ in 0..5 {
            let x = varied_returns(&mut r, periods, assets);
            let w = wealth_of_strategy(&theta, &x).unwrap();
            let benchmark = cover_derivative(&x, DEFAULT_TOLERANCE);
            prop_assert!(price * w >= benchmark - 1e-9 * benchmark.max(1.0), "{} < {}", price * w, benchmark);
        }
    }

    #[test]
    fn symmetric_engine_equals_dense(seed in any::<u64>(), periods in 1usize..=6, assets in 2usize..=3, uniform in any::<bool>()) {
        let mut r = rng(seed);
        let sym = if uniform { prior_cover_uniform(periods, assets) } else { prior_cover_ordentlich(periods, assets) }.unwrap();
        let dense = sym.to_dense().unwrap();
        let x = varied_returns(&mut r, periods, assets);
        let table = MarginalTable::new(&sym).unwrap();
        let mut sigma = SigmaTable::new(assets).unwrap();
        for t in 0..periods {
            let a = replicating_portfolio(&dense, x.prefix(t)).unwrap();
            let b = symmetric_portfolio(&sym, &sigma).unwrap();
            let c = table.portfolio(&sigma);
            prop_assert_eq!(a.degenerate, b.degenerate);
            for k in 0..assets {
                let (pa, pb, pc) = (a.portfolio.weights()[k], b.portfolio.weights()[k], c.portfolio.weights()[k]);
                prop_assert!((pa - pb).abs() <= 1e-10 * pa.max(pb).max(1e-300), "t={} k={} {} {}", t, k, pa, pb);
                prop_assert!((pa - pc).abs() <= 1e-10 * pa.max(pc).max(1e-300));
            }
            sigma = sigma_advance(&sigma, x.history(), t + 1).unwrap();
        }
        let w_dense = wealth_of_coefficients(&dense, &x).unwrap();
        assert_close(table.log_wealth(&sigma).exp(), w_dense, 1e-10, "log wealth");
        assert_close(wealth_of_coefficients(&sym, &x).unwrap(), w_dense, 1e-10, "symmetric wealth");
    }

    #[test]
    fn cone_closure(seed in any::<u64>(), periods in 1usize..=4, assets in 2usize..=3, lambda in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let a1 = random_dense(&mut r, periods, assets);
        let a2 = random_dense(&mut r, periods, assets);
        let (p1, p2) = (a1.scale(), a2.scale());
        let d1 = MultilinearPayoff(a1.clone());
        let d2 = MultilinearPayoff(a2.clone());
        let blend = Blend::with_deposits(
            lambda * p1,
            (1.0 - lambda) * p2,
            ReplicatingStrategy::new(a1).unwrap(),
            ReplicatingStrategy::new(a2).unwrap(),
        ).unwrap();
        let x = random_returns(&mut r, periods, assets, 0.5, 2.0);
        let deposit = lambda * p1 + (1.0 - lambda) * p2;
        let target = lambda * d1.evaluate(&x) + (1.0 - lambda) * d2.evaluate(&x);
        assert_close(deposit * wealth_of_strategy(&blend, &x).unwrap(), target, 1e-10, "blend");
    }
}

#[test]
fn majorant_is_tight_and_minimal() {
    for (periods, assets) in [(2, 2), (3, 2), (2, 3), (4, 2)] {
        let d = CoverDerivative::new(periods, assets);
        let alpha = majorant_coefficients(&d).unwrap();
        let price = alpha.scale();
        let mut weights = Vec::new();
        for_each_tuple(periods, assets, |t| weights.push(alpha.weight(t)));
        let mut idx = 0;
        for_each_tuple(periods, assets, |tuple| {
            let vertex = ReturnMatrix::kelly_sequence(tuple, assets);
            let theta = ReplicatingStrategy::new(alpha.clone()).unwrap();
            let w = wealth_of_strategy(&theta, &vertex).unwrap();
            assert!((price * w - d.vertex_value(tuple)).abs() < 1e-9);

            let delta = 0.5 * weights[idx];
            let mut perturbed = weights.clone();
            perturbed[idx] -= delta;
            perturbed.iter_mut().for_each(|v| *v /= 1.0 - delta);
            let lowered = MultilinearCoefficients::dense(periods, assets, perturbed, price).unwrap();
            let w = wealth_of_coefficients(&lowered, &vertex).unwrap();
            assert!(price * w < d.vertex_value(tuple), "{tuple:?}");
            idx += 1;
        });
    }
}

#[test]
fn sigma_matches_brute_force() {
    let mut r = rng(11);
    for periods in 0..=8 {
        for assets in 1..=3 {
            let x = random_returns(&mut r, periods.max(1), assets, 0.2, 2.0);
            let sigma = SigmaTable::from_history(x.prefix(periods)).unwrap();
            let mut brute = vec![0.0; TypeIndexer::new(periods, assets).len()];
            for_each_tuple(periods, assets, |tuple| {
                let n = TypeVector::of_tuple(tuple, assets);
                let prod: f64 = tuple.iter().enumerate().map(|(t, &j)| x.row(t)[j]).product();
                brute[sigma.indexer().rank(n.counts())] += prod;
            });
            for (ls, b) in sigma.log_values().iter().zip(&brute) {
                assert_close(ls.exp(), *b, 1e-12, "sigma");
            }
        }
    }
}

#[test]
fn marginal_table_matches_direct_enumeration() {
    for (periods, assets) in [(4, 2), (3, 3), (5, 2)] {
        for alpha in [prior_cover_ordentlich(periods, assets).unwrap(), prior_cover_uniform(periods, assets).unwrap()] {
            let table = MarginalTable::new(&alpha).unwrap();
            for t in 0..periods {
                for n in TypeIndexer::new(t, assets).iter() {
                    let n = TypeVector::new(n);
                    for k in 0..assets {
                        let direct = marginal_alpha(&alpha, t, k, &n).unwrap();
                        assert_close(table.log_alpha_tk(k, &n).exp(), direct, 1e-12, "marginal");
                    }
                }
            }
        }
    }
}

#[test]
fn payoff_route_agrees_for_multilinear_payoffs() {
    let mut r = rng(3);
    for _ in 0..10 {
        let alpha = random_dense(&mut r, 3, 2);
        let d = MultilinearPayoff(alpha.clone());
        assert_close(hedging_cost(&d).unwrap(), alpha.scale(), 1e-12, "cost");
        let x = random_returns(&mut r, 3, 2, 0.5, 2.0);
        for t in 0..3 {
            let a = replicating_portfolio(&alpha, x.prefix(t)).unwrap();
            if a.degenerate {
                continue;
            }
            let b = replicate_from_payoff(&d, x.prefix(t)).unwrap();
            for k in 0..2 {
                assert!((a.portfolio.weights()[k] - b.weights()[k]).abs() < 1e-10);
            }
        }
        let samples: Vec<_> = (0..5).map(|_| random_returns(&mut r, 3, 2, 0.5, 2.0)).collect();
        assert!(verify_hedgeable(&d, &samples, 1e-9).unwrap().hedgeable);
    }
    let samples: Vec<_> = (0..5).map(|_| random_returns(&mut r, 3, 2, 0.5, 2.0)).collect();
    assert!(!verify_hedgeable(&CoverDerivative::new(3, 2), &samples, 1e-9).unwrap().hedgeable);
}
