//! The trader-versus-nature game with payoff `W_theta(X) / D(X)`.

use crate::benchmarks::{evaluate_checked, perfect_trader, PayoffEvaluator};
use crate::error::{Error, Result};
use crate::market::{wealth_of_strategy, ReturnMatrix, TradingStrategy};
use crate::multilinear::{for_each_tuple, hedging_cost, tuple_count, DENSE_TUPLE_BUDGET};

/// `1 / p*[D]`: the best payoff ratio the trader can guarantee.
pub fn lower_value<P: PayoffEvaluator + ?Sized>(d: &P) -> Result<f64> {
    let cost = hedging_cost(d)?;
    if !(cost > 0.0) {
        return Err(Error::ZeroDenominator("payoff vanishes on every Kelly sequence".into()));
    }
    Ok(1.0 / cost)
}

/// `W_theta(X) / D(X)`.
pub fn payoff_ratio<S, P>(theta: &S, x: &ReturnMatrix, d: &P) -> Result<f64>
where
    S: TradingStrategy + ?Sized,
    P: PayoffEvaluator + ?Sized,
{
    let benchmark = evaluate_checked(d, x)?;
    if !(benchmark > 0.0) {
        return Err(Error::UndefinedPayoff);
    }
    Ok(wealth_of_strategy(theta, x)? / benchmark)
}

/// `prod_t ||x_t||_inf / D(X)`: the perfect trader's ratio, whose infimum over
/// paths is the upper value of the game.
pub fn upper_value_ratio<P: PayoffEvaluator + ?Sized>(x: &ReturnMatrix, d: &P) -> Result<f64> {
    let benchmark = evaluate_checked(d, x)?;
    if !(benchmark > 0.0) {
        return Err(Error::UndefinedPayoff);
    }
    Ok(perfect_trader(x) / benchmark)
}

/// Nature's equilibrium randomization over Kelly sequences, with
/// `P{X = (e_{j_1}, ..., e_{j_T})} = D(e_{j_1}, ..., e_{j_T}) / p*[D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NatureDistribution {
    periods: usize,
    assets: usize,
    /// Indexed by tuple, first period most significant.
    probabilities: Vec<f64>,
}

impl NatureDistribution {
    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Probability of the Kelly sequence for `tuple`.
    pub fn probability(&self, tuple: &[usize]) -> f64 {
        let idx = tuple.iter().fold(0, |acc, &j| acc * self.assets + j);
        self.probabilities[idx]
    }
}

fn check_enumerable(periods: usize, assets: usize) -> Result<()> {
    match tuple_count(periods, assets) {
        Some(n) if n <= DENSE_TUPLE_BUDGET => Ok(()),
        _ => Err(Error::budget(
            format!("{assets}^{periods} Kelly sequences"),
            DENSE_TUPLE_BUDGET,
            "shorten the horizon",
        )),
    }
}

pub fn nature_distribution<P: PayoffEvaluator + ?Sized>(d: &P) -> Result<NatureDistribution> {
    if !d.is_multiconvex_homogeneous() {
        return Err(Error::NotMulticonvex);
    }
    check_enumerable(d.periods(), d.assets())?;
    let mut values = Vec::new();
    for_each_tuple(d.periods(), d.assets(), |tuple| values.push(d.vertex_value(tuple)));
    let cost: f64 = values.iter().sum();
    if !(cost > 0.0) {
        return Err(Error::ZeroDenominator("payoff vanishes on every Kelly sequence".into()));
    }
    Ok(NatureDistribution {
        periods: d.periods(),
        assets: d.assets(),
        probabilities: values.into_iter().map(|v| v / cost).collect(),
    })
}

/// `sum_X P(X) W_theta(X) / D(X)` over nature's support, by exact enumeration.
/// Sequences with zero probability (where `D` vanishes) contribute nothing.
pub fn expected_payoff<S, P>(theta: &S, dist: &NatureDistribution, d: &P) -> Result<f64>
where
    S: TradingStrategy + ?Sized,
    P: PayoffEvaluator + ?Sized,
{
    Error::check_assets(dist.assets, theta.assets())?;
    Error::check_assets(dist.assets, d.assets())?;
    let mut total = 0.0;
    let mut failure = None;
    for_each_tuple(dist.periods, dist.assets, |tuple| {
        if failure.is_some() {
            return;
        }
        let p = dist.probability(tuple);
        if p == 0.0 {
            return;
        }
        let x = ReturnMatrix::kelly_sequence(tuple, dist.assets);
        match wealth_of_strategy(theta, &x) {
            Ok(w) => total += p * w / d.vertex_value(tuple),
            Err(e) => failure = Some(e),
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// A finite, nonempty set of return paths sharing `(T, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet(Vec<ReturnMatrix>);

impl PathSet {
    pub fn new(paths: Vec<ReturnMatrix>) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::InvalidArgument("path set is empty".into()))?;
        let (periods, assets) = (first.periods(), first.assets());
        if paths.iter().any(|p| p.periods() != periods || p.assets() != assets) {
            return Err(Error::InvalidArgument("paths in a set must share T and m".into()));
        }
        Ok(Self(paths))
    }

    /// Every Kelly sequence of length `T` over `m` assets.
    pub fn kelly_sequences(periods: usize, assets: usize) -> Result<Self> {
        check_enumerable(periods, assets)?;
        let mut paths = Vec::new();
        for_each_tuple(periods, assets, |tuple| paths.push(ReturnMatrix::kelly_sequence(tuple, assets)));
        Self::new(paths)
    }

    pub fn paths(&self) -> &[ReturnMatrix] {
        &self.0
    }
}

/// `U[W] = min over the path set of W(X) / D(X)`.
pub fn co_utility<S, P>(theta: &S, d: &P, paths: &PathSet) -> Result<f64>
where
    S: TradingStrategy + ?Sized,
    P: PayoffEvaluator + ?Sized,
{
    paths
        .paths()
        .iter()
        .map(|x| payoff_ratio(theta, x, d))
        .try_fold(f64::INFINITY, |acc, r| r.map(|r| acc.min(r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{CoverDerivative, PerfectTrader};
    use crate::market::{ConstantRebalanced, PortfolioVector};
    use crate::multilinear::{majorant_coefficients, ReplicatingStrategy};

    #[test]
    fn values_for_two_by_two() {
        let d = CoverDerivative::new(2, 2);
        assert!((lower_value(&d).unwrap() - 0.4).abs() < 1e-12);
        let pt = PerfectTrader { periods: 3, assets: 2 };
        assert!((lower_value(&pt).unwrap() - 0.125).abs() < 1e-15);
        let dist = nature_distribution(&d).unwrap();
        let expected = [0.4, 0.1, 0.1, 0.4];
        for (p, e) in dist.probabilities().iter().zip(expected) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn one_period_nature_is_uniform() {
        let dist = nature_distribution(&CoverDerivative::new(1, 4)).unwrap();
        assert!(dist.probabilities().iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn ratios() {
        let d = CoverDerivative::new(2, 2);
        let ones = ReturnMatrix::ones(2, 2);
        let crp = ConstantRebalanced(PortfolioVector::vertex(0, 2));
        assert!((payoff_ratio(&crp, &ones, &d).unwrap() - 1.0).abs() < 1e-12);
        let e22 = ReturnMatrix::kelly_sequence(&[1, 1], 2);
        assert_eq!(payoff_ratio(&crp, &e22, &d).unwrap(), 0.0);
        assert!((upper_value_ratio(&ones, &d).unwrap() - 1.0).abs() < 1e-12);
        let e12 = ReturnMatrix::kelly_sequence(&[0, 1], 2);
        assert!((upper_value_ratio(&e12, &d).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn zero_benchmark_is_an_error() {
        let d = crate::benchmarks::FnPayoff::new(1, 2, true, |x: &ReturnMatrix| x.row(0)[0]);
        let crp = ConstantRebalanced(PortfolioVector::uniform(2));
        let x = ReturnMatrix::kelly_sequence(&[1], 2);
        assert_eq!(payoff_ratio(&crp, &x, &d).unwrap_err(), Error::UndefinedPayoff);
        let paths = PathSet::kelly_sequences(1, 2).unwrap();
        assert!(co_utility(&crp, &d, &paths).is_err());
    }

    #[test]
    fn superhedge_utility_on_vertices_is_lower_value() {
        let d = CoverDerivative::new(2, 2);
        let theta = ReplicatingStrategy::new(majorant_coefficients(&d).unwrap()).unwrap();
        let paths = PathSet::kelly_sequences(2, 2).unwrap();
        assert!((co_utility(&theta, &d, &paths).unwrap() - 0.4).abs() < 1e-12);
        let flat = PathSet::new(vec![ReturnMatrix::ones(2, 2)]).unwrap();
        assert!((co_utility(&theta, &d, &flat).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expected_payoff_ignores_strategy() {
        let d = CoverDerivative::new(2, 2);
        let dist = nature_distribution(&d).unwrap();
        let crp = ConstantRebalanced(PortfolioVector::vertex(0, 2));
        assert!((expected_payoff(&crp, &dist, &d).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn path_set_validation() {
        assert!(PathSet::new(vec![]).is_err());
        assert!(PathSet::new(vec![ReturnMatrix::ones(1, 2), ReturnMatrix::ones(2, 2)]).is_err());
    }
}
