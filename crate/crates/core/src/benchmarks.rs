//! Benchmark payoffs (lookback derivatives) and the best constant-rebalanced
//! portfolio in hindsight.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{crp_wealth, wealth_of_strategy, PortfolioVector, ReturnMatrix, TradingStrategy};
use crate::multilinear::types::TypeVector;
use crate::pricing::log_vertex_value;

/// Default optimality tolerance for payoff evaluation of the hindsight benchmark.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

const MAX_ITERATIONS: usize = 1_000;
const GRID_POINT_BUDGET: u64 = 5_000_000;

/// A derivative paying `D(x_1, ..., x_T) >= 0`.
pub trait PayoffEvaluator {
    fn periods(&self) -> usize;

    fn assets(&self) -> usize;

    /// Caller guarantees `x` has `periods()` rows of `assets()` entries.
    fn evaluate(&self, x: &ReturnMatrix) -> f64;

    /// Whether `D` is convex (subadditive) and positively homogeneous separately
    /// in each period's return vector. Asserted by the implementor.
    fn is_multiconvex_homogeneous(&self) -> bool {
        false
    }

    /// `D(e_{j_1}, ..., e_{j_T})`.
    fn vertex_value(&self, tuple: &[usize]) -> f64 {
        self.evaluate(&ReturnMatrix::kelly_sequence(tuple, self.assets()))
    }

    /// Closed-form vertex value for payoffs symmetric under row permutation,
    /// where the value depends only on the type of the tuple.
    fn type_vertex_value(&self, _n: &TypeVector) -> Option<f64> {
        None
    }
}

impl<P: PayoffEvaluator + ?Sized> PayoffEvaluator for &P {
    fn periods(&self) -> usize {
        (**self).periods()
    }
    fn assets(&self) -> usize {
        (**self).assets()
    }
    fn evaluate(&self, x: &ReturnMatrix) -> f64 {
        (**self).evaluate(x)
    }
    fn is_multiconvex_homogeneous(&self) -> bool {
        (**self).is_multiconvex_homogeneous()
    }
    fn vertex_value(&self, tuple: &[usize]) -> f64 {
        (**self).vertex_value(tuple)
    }
    fn type_vertex_value(&self, n: &TypeVector) -> Option<f64> {
        (**self).type_vertex_value(n)
    }
}

/// Evaluates `d` after checking that `x` has the payoff's shape.
pub fn evaluate_checked<P: PayoffEvaluator + ?Sized>(d: &P, x: &ReturnMatrix) -> Result<f64> {
    Error::check_assets(d.assets(), x.assets())?;
    if d.periods() != x.periods() {
        return Err(Error::InvalidArgument(format!(
            "payoff is defined on {} periods, path has {}",
            d.periods(),
            x.periods()
        )));
    }
    Ok(d.evaluate(x))
}

/// Payoff backed by a closure.
pub struct FnPayoff<F> {
    periods: usize,
    assets: usize,
    multiconvex: bool,
    f: F,
}

impl<F: Fn(&ReturnMatrix) -> f64> FnPayoff<F> {
    pub fn new(periods: usize, assets: usize, multiconvex_homogeneous: bool, f: F) -> Self {
        Self {
            periods,
            assets,
            multiconvex: multiconvex_homogeneous,
            f,
        }
    }
}

impl<F: Fn(&ReturnMatrix) -> f64> PayoffEvaluator for FnPayoff<F> {
    fn periods(&self) -> usize {
        self.periods
    }
    fn assets(&self) -> usize {
        self.assets
    }
    fn evaluate(&self, x: &ReturnMatrix) -> f64 {
        (self.f)(x)
    }
    fn is_multiconvex_homogeneous(&self) -> bool {
        self.multiconvex
    }
}

/// Final wealth of the best constant-rebalanced portfolio in hindsight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverDerivative {
    pub periods: usize,
    pub assets: usize,
    pub tolerance: f64,
}

impl CoverDerivative {
    pub fn new(periods: usize, assets: usize) -> Self {
        Self {
            periods,
            assets,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl PayoffEvaluator for CoverDerivative {
    fn periods(&self) -> usize {
        self.periods
    }
    fn assets(&self) -> usize {
        self.assets
    }
    fn evaluate(&self, x: &ReturnMatrix) -> f64 {
        best_crp(x, self.tolerance).value
    }
    fn is_multiconvex_homogeneous(&self) -> bool {
        true
    }
    fn vertex_value(&self, tuple: &[usize]) -> f64 {
        log_vertex_value(TypeVector::of_tuple(tuple, self.assets).counts()).exp()
    }
    fn type_vertex_value(&self, n: &TypeVector) -> Option<f64> {
        Some(log_vertex_value(n.counts()).exp())
    }
}

/// `prod_t max_j x_{tj}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerfectTrader {
    pub periods: usize,
    pub assets: usize,
}

impl PayoffEvaluator for PerfectTrader {
    fn periods(&self) -> usize {
        self.periods
    }
    fn assets(&self) -> usize {
        self.assets
    }
    fn evaluate(&self, x: &ReturnMatrix) -> f64 {
        perfect_trader(x)
    }
    fn is_multiconvex_homogeneous(&self) -> bool {
        true
    }
    fn vertex_value(&self, _tuple: &[usize]) -> f64 {
        1.0
    }
    fn type_vertex_value(&self, _n: &TypeVector) -> Option<f64> {
        Some(1.0)
    }
}

/// `max_j prod_t x_{tj}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerfectBuyAndHold {
    pub periods: usize,
    pub assets: usize,
}

impl PayoffEvaluator for PerfectBuyAndHold {
    fn periods(&self) -> usize {
        self.periods
    }
    fn assets(&self) -> usize {
        self.assets
    }
    fn evaluate(&self, x: &ReturnMatrix) -> f64 {
        perfect_buy_and_hold(x)
    }
    fn is_multiconvex_homogeneous(&self) -> bool {
        true
    }
}

/// The final wealth `W_theta` of a trading strategy, viewed as a payoff.
pub struct StrategyWealth<S> {
    pub strategy: S,
    pub periods: usize,
}

impl<S: TradingStrategy> PayoffEvaluator for StrategyWealth<S> {
    fn periods(&self) -> usize {
        self.periods
    }
    fn assets(&self) -> usize {
        self.strategy.assets()
    }
    fn evaluate(&self, x: &ReturnMatrix) -> f64 {
        wealth_of_strategy(&self.strategy, x).unwrap_or(0.0)
    }
}

/// Final wealth of a constant-rebalanced portfolio; multilinear.
#[derive(Debug, Clone, PartialEq)]
pub struct CrpPayoff {
    pub portfolio: PortfolioVector,
    pub periods: usize,
}

impl PayoffEvaluator for CrpPayoff {
    fn periods(&self) -> usize {
        self.periods
    }
    fn assets(&self) -> usize {
        self.portfolio.assets()
    }
    fn evaluate(&self, x: &ReturnMatrix) -> f64 {
        crp_wealth(&self.portfolio, x).unwrap_or(0.0)
    }
    fn is_multiconvex_homogeneous(&self) -> bool {
        true
    }
    fn vertex_value(&self, tuple: &[usize]) -> f64 {
        tuple.iter().map(|&j| self.portfolio.weights()[j]).product()
    }
}

/// Result of the hindsight-optimal rebalancing search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestCrpResult {
    pub maximizer: Vec<f64>,
    /// `crp_wealth(maximizer, X)`.
    pub value: f64,
    pub iterations: usize,
    /// Certified bound on `D(X)/value - 1`.
    pub gap_bound: f64,
}

impl BestCrpResult {
    pub fn portfolio(&self) -> PortfolioVector {
        PortfolioVector::from_unnormalized(self.maximizer.clone())
            .unwrap_or_else(|_| PortfolioVector::uniform(self.maximizer.len()))
    }
}

struct LogWealth<'a> {
    x: &'a ReturnMatrix,
}

impl LogWealth<'_> {
    fn value(&self, c: &[f64]) -> f64 {
        self.x
            .rows()
            .map(|row| row.iter().zip(c).map(|(a, b)| a * b).sum::<f64>().ln())
            .sum()
    }

    /// Returns `(objective, gradient, per-row dot products)`.
    fn gradient(&self, c: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let m = c.len();
        let mut grad = vec![0.0; m];
        let mut dots = Vec::with_capacity(self.x.periods());
        let mut value = 0.0;
        for row in self.x.rows() {
            let d: f64 = row.iter().zip(c).map(|(a, b)| a * b).sum();
            value += d.ln();
            for (g, xj) in grad.iter_mut().zip(row) {
                *g += xj / d;
            }
            dots.push(d);
        }
        (value, grad, dots)
    }
}

/// Frank-Wolfe gap of the log-wealth objective: `max_j g_j - <c, g>`.
fn duality_gap(c: &[f64], grad: &[f64]) -> f64 {
    let inner: f64 = c.iter().zip(grad).map(|(a, b)| a * b).sum();
    let best = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (best - inner).max(0.0)
}

/// Newton direction for the log-wealth objective restricted to `free`
/// coordinates, keeping the weights on the simplex.
fn newton_direction(x: &ReturnMatrix, free: &[usize], grad: &[f64], dots: &[f64]) -> Option<Vec<f64>> {
    let k = free.len();
    let mut kkt = DMatrix::<f64>::zeros(k + 1, k + 1);
    for (row, d) in x.rows().zip(dots) {
        let w = 1.0 / (d * d);
        for (a, &i) in free.iter().enumerate() {
            let xi = row[i] * w;
            if xi == 0.0 {
                continue;
            }
            for (b, &j) in free.iter().enumerate() {
                kkt[(a, b)] += xi * row[j];
            }
        }
    }
    let trace: f64 = (0..k).map(|a| kkt[(a, a)]).sum();
    let ridge = 1e-13 * (trace / k as f64).max(f64::MIN_POSITIVE);
    for a in 0..k {
        kkt[(a, a)] += ridge;
        kkt[(a, k)] = 1.0;
        kkt[(k, a)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k + 1);
    for (a, &i) in free.iter().enumerate() {
        rhs[a] = grad[i];
    }
    let solution = kkt.lu().solve(&rhs)?;
    let drift = (0..k).map(|a| solution[a]).sum::<f64>() / k as f64;
    let direction: Vec<f64> = (0..k).map(|a| solution[a] - drift).collect();
    direction.iter().all(|v| v.is_finite()).then_some(direction)
}

/// Maximizes `prod_t <c, x_t>` over the simplex.
///
/// Active-set Newton ascent on `sum_t log <c, x_t>` with backtracking and a
/// ratio test, falling back to the multiplicative fixed-point update when a
/// Newton step makes no progress. Stops once the certified relative gap
/// `exp(max_j g_j - <c, g>) - 1` is at most `tol`.
pub fn best_crp(x: &ReturnMatrix, tol: f64) -> BestCrpResult {
    best_crp_from(x, tol, None)
}

/// [`best_crp`] with an optional warm start.
pub fn best_crp_from(x: &ReturnMatrix, tol: f64, start: Option<&[f64]>) -> BestCrpResult {
    let m = x.assets();
    let objective = LogWealth { x };
    let target_gap = tol.max(0.0).ln_1p();

    let mut c = match start {
        Some(s) if s.len() == m && s.iter().all(|v| *v > 0.0) && objective.value(s).is_finite() => {
            let total: f64 = s.iter().sum();
            s.iter().map(|v| v / total).collect()
        }
        _ => vec![1.0 / m as f64; m],
    };

    let mut iterations = 0;
    let mut gap;
    let mut stalled = 0;
    loop {
        let (value, grad, dots) = objective.gradient(&c);
        gap = duality_gap(&c, &grad);
        let noise = 16.0 * f64::EPSILON * (x.periods() as f64 + value.abs());
        if m == 1 || gap <= target_gap || iterations >= MAX_ITERATIONS || stalled >= 3 {
            break;
        }
        iterations += 1;

        let inner: f64 = c.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let mut free: Vec<usize> = (0..m).filter(|&j| c[j] > 0.0).collect();
        if let Some((j, _)) = grad
            .iter()
            .enumerate()
            .filter(|(j, g)| c[*j] == 0.0 && **g > inner)
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            free.push(j);
            free.sort_unstable();
        }

        let mut improved = false;
        while free.len() > 1 {
            let Some(dir) = newton_direction(x, &free, &grad, &dots) else {
                break;
            };
            // coordinates pinned at zero that want to decrease leave the free set
            let pinned: Vec<usize> = free
                .iter()
                .zip(&dir)
                .filter(|(&j, &d)| c[j] == 0.0 && d < 0.0)
                .map(|(&j, _)| j)
                .collect();
            if !pinned.is_empty() {
                free.retain(|j| !pinned.contains(j));
                continue;
            }
            // centre the gradient so solver residue in sum(dir) cannot swamp the slope
            let mean_grad = free.iter().map(|&j| grad[j]).sum::<f64>() / free.len() as f64;
            let slope: f64 = free.iter().zip(&dir).map(|(&j, d)| (grad[j] - mean_grad) * d).sum();
            if slope <= 0.0 {
                break;
            }
            let max_step = free
                .iter()
                .zip(&dir)
                .filter(|(_, &d)| d < 0.0)
                .map(|(&j, &d)| c[j] / -d)
                .fold(f64::INFINITY, f64::min);
            let mut step = max_step.min(1.0);
            while step > 1e-18 {
                let mut trial = c.clone();
                for (&j, d) in free.iter().zip(&dir) {
                    trial[j] = (trial[j] + step * d).max(0.0);
                }
                if step == max_step {
                    for (&j, &d) in free.iter().zip(&dir) {
                        if d < 0.0 && c[j] / -d <= max_step {
                            trial[j] = 0.0;
                        }
                    }
                }
                let total: f64 = trial.iter().sum();
                trial.iter_mut().for_each(|v| *v /= total);
                let trial_value = objective.value(&trial);
                if trial_value.is_finite() && trial_value >= value + 1e-4 * step * slope {
                    improved = trial_value > value;
                    c = trial;
                    break;
                }
                // Near the optimum the objective change drowns in rounding;
                // accept a step that stays level and shrinks the certified gap.
                if trial_value.is_finite() && trial_value >= value - noise {
                    let (_, trial_grad, _) = objective.gradient(&trial);
                    if duality_gap(&trial, &trial_grad) < gap {
                        improved = true;
                        c = trial;
                        break;
                    }
                }
                step *= 0.5;
            }
            break;
        }

        if !improved {
            // multiplicative update c_j <- c_j g_j / <c, g>; monotone for this objective
            let trial: Vec<f64> = c.iter().zip(&grad).map(|(cj, g)| cj * g / inner).collect();
            let trial_value = objective.value(&trial);
            if trial_value > value {
                c = trial;
                stalled = 0;
            } else {
                stalled += 1;
            }
        } else {
            stalled = 0;
        }
    }

    let portfolio = PortfolioVector::from_unnormalized(c).unwrap_or_else(|_| PortfolioVector::uniform(m));
    let value = crp_wealth(&portfolio, x).unwrap_or(0.0);
    BestCrpResult {
        maximizer: portfolio.into_inner(),
        value,
        iterations,
        gap_bound: gap.exp_m1(),
    }
}

/// Maximum of `crp_wealth` over the barycentric lattice with `resolution`
/// points per simplex edge. A lower bound on the hindsight optimum.
pub fn best_crp_grid_oracle(x: &ReturnMatrix, resolution: usize) -> Result<f64> {
    let m = x.assets();
    if resolution < 2 {
        return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
    }
    if m > 3 {
        return Err(Error::budget(
            format!("grid enumeration over {m} assets"),
            3,
            "the grid oracle supports at most 3 assets",
        ));
    }
    let steps = resolution - 1;
    let points = crate::multilinear::types::type_class_count(steps, m).unwrap_or(u64::MAX);
    if points > GRID_POINT_BUDGET {
        return Err(Error::budget("grid points", GRID_POINT_BUDGET, "lower the resolution"));
    }
    let indexer = crate::multilinear::types::TypeIndexer::new(steps, m);
    let h = 1.0 / steps as f64;
    let mut best = 0.0_f64;
    let mut c = vec![0.0; m];
    for lattice in indexer.iter() {
        for (cj, n) in c.iter_mut().zip(&lattice) {
            *cj = *n as f64 * h;
        }
        let w = crate::numeric::product(x.rows().map(|row| row.iter().zip(&c).map(|(a, b)| a * b).sum()), x.periods());
        best = best.max(w);
    }
    Ok(best)
}

/// `prod_k (n_k / T)^{n_k}` with `0^0 = 1`: the hindsight benchmark at any
/// Kelly sequence of type `n`.
pub fn cover_vertex_value(n: &TypeVector, periods: usize) -> Result<f64> {
    if n.total() != periods {
        return Err(Error::InvalidArgument(format!(
            "type {n} sums to {}, not T={periods}",
            n.total()
        )));
    }
    Ok(log_vertex_value(n.counts()).exp())
}

/// `prod_t ||x_t||_inf`.
pub fn perfect_trader(x: &ReturnMatrix) -> f64 {
    crate::numeric::product(
        x.rows().map(|row| row.iter().copied().fold(0.0, f64::max)),
        x.periods(),
    )
}

/// `max_j prod_t x_{tj}`.
pub fn perfect_buy_and_hold(x: &ReturnMatrix) -> f64 {
    (0..x.assets())
        .map(|j| crate::numeric::product(x.rows().map(|row| row[j]), x.periods()))
        .fold(0.0, f64::max)
}

/// `max_{s <= t} (S_t - S_s)` over a price series (prices after `S_0`).
pub fn best_single_trade(prices: &[f64]) -> Result<f64> {
    let (&first, rest) = prices
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("empty price series".into()))?;
    let mut lowest = first;
    let mut best = 0.0_f64;
    for &p in rest {
        best = best.max(p - lowest);
        lowest = lowest.min(p);
    }
    Ok(best)
}

/// `max_{c in simplex} prod_t <c, x_t>`.
pub fn cover_derivative(x: &ReturnMatrix, tol: f64) -> f64 {
    best_crp(x, tol).value
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rm(rows: &[&[f64]]) -> ReturnMatrix {
        ReturnMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn shannon_demon_pair() {
        let x = rm(&[&[2.0, 1.0], &[0.5, 1.0]]);
        let r = best_crp(&x, 1e-13);
        assert!((r.value - 1.125).abs() < 1e-12);
        assert!((r.maximizer[0] - 0.5).abs() < 1e-6);
        assert!(r.gap_bound <= 1e-13);
        let g = best_crp_grid_oracle(&x, 1001).unwrap();
        assert!((g - 1.125).abs() < 1e-6);
    }

    #[test]
    fn kelly_pair_vertex() {
        let x = rm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let r = best_crp(&x, 1e-13);
        assert!((r.value - 0.25).abs() < 1e-12);
        assert!((r.maximizer[0] - 0.5).abs() < 1e-6);
        assert!((best_crp_grid_oracle(&x, 1001).unwrap() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn flat_market_returns_uniform() {
        let x = ReturnMatrix::ones(4, 3);
        let r = best_crp(&x, 1e-12);
        assert_eq!(r.value, 1.0);
        assert_eq!(r.maximizer, vec![1.0 / 3.0; 3]);
        assert_eq!(r.iterations, 0);
        assert_eq!(best_crp_grid_oracle(&x, 7).unwrap(), 1.0);
    }

    #[test]
    fn boundary_optimum() {
        // stock 1 dominates every period: optimum is the vertex e_1
        let x = rm(&[&[2.0, 1.0, 0.5], &[1.5, 1.0, 1.2], &[1.1, 0.9, 1.0]]);
        let r = best_crp(&x, 1e-12);
        assert!((r.value - 2.0 * 1.5 * 1.1).abs() < 1e-12);
        assert!(r.maximizer[0] > 1.0 - 1e-9);
    }

    #[test]
    fn vertex_values() {
        let v = cover_vertex_value(&TypeVector::new(vec![2, 1]), 3).unwrap();
        assert!((v - 4.0 / 27.0).abs() < 1e-15);
        assert_eq!(cover_vertex_value(&TypeVector::new(vec![0, 3]), 3).unwrap(), 1.0);
        assert!((cover_vertex_value(&TypeVector::new(vec![1, 1]), 2).unwrap() - 0.25).abs() < 1e-15);
        assert!(cover_vertex_value(&TypeVector::new(vec![1, 1]), 3).is_err());
    }

    #[test]
    fn perfect_payoffs() {
        let x = rm(&[&[2.0, 1.0], &[0.5, 1.0]]);
        assert_eq!(perfect_trader(&x), 2.0);
        assert_eq!(perfect_buy_and_hold(&x), 1.0);
        let e = rm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(perfect_trader(&e), 1.0);
        assert_eq!(perfect_buy_and_hold(&rm(&[&[2.0, 1.0], &[2.0, 1.0]])), 4.0);
        assert_eq!(perfect_trader(&ReturnMatrix::ones(3, 2)), 1.0);
    }

    #[test]
    fn single_trade() {
        assert_eq!(best_single_trade(&[1.0, 3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(best_single_trade(&[5.0, 4.0, 1.0]).unwrap(), 0.0);
        assert_eq!(best_single_trade(&[7.0]).unwrap(), 0.0);
        assert!(best_single_trade(&[]).is_err());
    }

    #[test]
    fn cover_symmetry_and_flat_row() {
        let x = rm(&[&[2.0, 1.0], &[0.5, 1.0], &[1.3, 0.7]]);
        let base = cover_derivative(&x, 1e-13);
        let permuted = cover_derivative(&x.with_row_order(&[2, 0, 1]), 1e-13);
        assert!((base - permuted).abs() < 1e-12 * base);
        let extended = cover_derivative(&x.with_row(&[1.0, 1.0]).unwrap(), 1e-13);
        assert!((base - extended).abs() < 1e-12 * base);
    }

    #[test]
    fn grid_oracle_rejects_large_m() {
        let x = ReturnMatrix::ones(1, 4);
        assert!(best_crp_grid_oracle(&x, 10).is_err());
        assert!(best_crp_grid_oracle(&ReturnMatrix::ones(1, 2), 1).is_err());
    }
}
