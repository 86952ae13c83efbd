//! Type-class engine for symmetric weights `alpha(n_1, ..., n_m)`.
//!
//! The replicating portfolio after `t` periods is
//! `theta_k ∝ sum_{|N| = t} alpha_tk(N) sigma(N; x^t)`, where `sigma(N; x^t)`
//! sums the extremal wealths of every `j^t` of type `N` and `alpha_tk(N)` is
//! the marginal weight of continuing with asset `k`. Both are kept in
//! log-space; `n^n`-style weights leave the double range quickly.

use super::types::{TypeIndexer, TypeVector};
use super::{check_symmetric_budget, MultilinearCoefficients, ReplicatedPortfolio};
use crate::error::{Error, Result};
use crate::market::History;
use crate::numeric::{normalize_log_weights, LogAccumulator};
use crate::pricing::{log_vertex_value, LogFactorialTable, PriceRecurrence};

/// Cap on the total number of entries a [`MarginalTable`] stores across stages.
pub const MARGINAL_ENTRY_BUDGET: u64 = 50_000_000;

/// `ln sigma(N; x^t)` for every type `N` with `|N| = t`.
#[derive(Debug, Clone)]
pub struct SigmaTable {
    indexer: TypeIndexer,
    log_values: Vec<f64>,
}

impl SigmaTable {
    /// Stage zero: `sigma(0; h^0) = 1`.
    pub fn new(assets: usize) -> Result<Self> {
        check_symmetric_budget(0, assets)?;
        Ok(Self {
            indexer: TypeIndexer::new(0, assets),
            log_values: vec![0.0],
        })
    }

    /// Tabulates bottom-up through every row of `history`.
    pub fn from_history(history: History<'_>) -> Result<Self> {
        check_symmetric_budget(history.len(), history.assets())?;
        let mut table = Self::new(history.assets())?;
        for row in history.rows() {
            table = table.advance(row)?;
        }
        Ok(table)
    }

    pub fn stage(&self) -> usize {
        self.indexer.total()
    }

    pub fn assets(&self) -> usize {
        self.indexer.parts()
    }

    pub fn indexer(&self) -> &TypeIndexer {
        &self.indexer
    }

    /// Log-values in [`TypeIndexer`] order.
    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    pub fn log_get(&self, n: &TypeVector) -> f64 {
        assert_eq!(n.total(), self.stage());
        self.log_values[self.indexer.rank(n.counts())]
    }

    pub fn get(&self, n: &TypeVector) -> f64 {
        self.log_get(n).exp()
    }

    /// `sigma(N; x^{t+1}) = sum_k sigma(N - e_k; x^t) x_{t+1,k}`.
    pub fn advance(&self, row: &[f64]) -> Result<Self> {
        let m = self.assets();
        Error::check_assets(m, row.len())?;
        let stage = self.stage() + 1;
        check_symmetric_budget(stage, m)?;
        let log_row: Vec<f64> = row.iter().map(|x| x.ln()).collect();
        let indexer = TypeIndexer::new(stage, m);
        let mut log_values = Vec::with_capacity(indexer.len());
        let mut below = vec![0usize; m];
        for counts in indexer.iter() {
            let mut acc = LogAccumulator::new();
            below.copy_from_slice(&counts);
            for k in 0..m {
                if counts[k] == 0 {
                    continue;
                }
                below[k] -= 1;
                acc.add(self.log_values[self.indexer.rank(&below)] + log_row[k]);
                below[k] += 1;
            }
            log_values.push(acc.value());
        }
        Ok(Self { indexer, log_values })
    }
}

/// Advances `table` (which must hold stage `t - 1`) with row `t` of `history`
/// (1-based), producing stage `t`.
pub fn sigma_advance(table: &SigmaTable, history: History<'_>, t: usize) -> Result<SigmaTable> {
    if t == 0 || table.stage() + 1 != t {
        return Err(Error::StageMismatch {
            expected: t.saturating_sub(1),
            found: table.stage(),
        });
    }
    if t > history.len() {
        return Err(Error::InvalidArgument(format!("history has no row {t}")));
    }
    table.advance(history.row(t - 1))
}

fn require_symmetric(alpha: &MultilinearCoefficients) -> Result<&[f64]> {
    alpha
        .symmetric_log_weights()
        .ok_or_else(|| Error::InvalidArgument("operation needs symmetric coefficients".into()))
}

/// `alpha_tk(N) = sum_{|n| = T-t-1} multinomial(T-t-1; n) alpha(N + n + e_k)`,
/// by direct enumeration of the compositions `n`.
pub fn marginal_alpha(alpha: &MultilinearCoefficients, t: usize, k: usize, n: &TypeVector) -> Result<f64> {
    Ok(log_marginal_alpha(alpha, t, k, n)?.exp())
}

fn log_marginal_alpha(alpha: &MultilinearCoefficients, t: usize, k: usize, n: &TypeVector) -> Result<f64> {
    let log_weights = require_symmetric(alpha)?;
    let (periods, m) = (alpha.periods(), alpha.assets());
    if t >= periods {
        return Err(Error::InvalidArgument(format!("stage {t} must be below the horizon {periods}")));
    }
    Error::check_assets(m, n.assets())?;
    if k >= m || n.total() != t {
        return Err(Error::InvalidArgument(format!("need k < {m} and |N| = {t}; got k={k}, N={n}")));
    }
    let rest = periods - t - 1;
    let lf = LogFactorialTable::new(rest);
    let top = TypeIndexer::new(periods, m);
    let mut full = vec![0usize; m];
    let mut acc = LogAccumulator::new();
    for comp in TypeIndexer::new(rest, m).iter() {
        for j in 0..m {
            full[j] = n.counts()[j] + comp[j];
        }
        full[k] += 1;
        acc.add(lf.log_multinomial(&comp) + log_weights[top.rank(&full)]);
    }
    Ok(acc.value())
}

/// `theta_k ∝ sum_N alpha_tk(N) sigma(N; x^t)` with `alpha_tk` computed by
/// direct enumeration. `sigma` must be tabulated from the prefix.
pub fn symmetric_portfolio(alpha: &MultilinearCoefficients, sigma: &SigmaTable) -> Result<ReplicatedPortfolio> {
    require_symmetric(alpha)?;
    Error::check_assets(alpha.assets(), sigma.assets())?;
    let t = sigma.stage();
    let mut log_numerators = Vec::with_capacity(alpha.assets());
    for k in 0..alpha.assets() {
        let mut acc = LogAccumulator::new();
        for (counts, ls) in sigma.indexer().iter().zip(sigma.log_values()) {
            if *ls == f64::NEG_INFINITY {
                continue;
            }
            acc.add(log_marginal_alpha(alpha, t, k, &TypeVector::new(counts))? + ls);
        }
        log_numerators.push(acc.value());
    }
    Ok(portfolio_from_log(log_numerators))
}

fn portfolio_from_log(log_numerators: Vec<f64>) -> ReplicatedPortfolio {
    let m = log_numerators.len();
    match normalize_log_weights(&log_numerators) {
        Some(w) => ReplicatedPortfolio::from_weights(w),
        None => ReplicatedPortfolio::degenerate(m),
    }
}

/// Marginal weights `B_s(M) = sum over continuations of alpha`, for every
/// stage `s` and type `|M| = s`, built backward with
/// `B_s(M) = sum_k B_{s+1}(M + e_k)` from `B_T = alpha`. Then
/// `alpha_tk(N) = B_{t+1}(N + e_k)`.
#[derive(Debug, Clone)]
pub struct MarginalTable {
    assets: usize,
    stages: Vec<(TypeIndexer, Vec<f64>)>,
}

impl MarginalTable {
    pub fn new(alpha: &MultilinearCoefficients) -> Result<Self> {
        let log_weights = require_symmetric(alpha)?;
        let (periods, m) = (alpha.periods(), alpha.assets());
        let entries = super::type_class_count(periods, m + 1).unwrap_or(u64::MAX);
        if entries > MARGINAL_ENTRY_BUDGET {
            return Err(Error::budget(
                format!("marginal table with {entries} entries"),
                MARGINAL_ENTRY_BUDGET,
                "shorten the horizon or reduce the asset count",
            ));
        }
        let mut stages = Vec::with_capacity(periods + 1);
        stages.push((TypeIndexer::new(periods, m), log_weights.to_vec()));
        let mut above = vec![0usize; m];
        for s in (0..periods).rev() {
            let indexer = TypeIndexer::new(s, m);
            let (upper_idx, upper) = stages.last().expect("nonempty");
            let mut values = Vec::with_capacity(indexer.len());
            for counts in indexer.iter() {
                above.copy_from_slice(&counts);
                let mut acc = LogAccumulator::new();
                for k in 0..m {
                    above[k] += 1;
                    acc.add(upper[upper_idx.rank(&above)]);
                    above[k] -= 1;
                }
                values.push(acc.value());
            }
            stages.push((indexer, values));
        }
        stages.reverse();
        Ok(Self { assets: m, stages })
    }

    pub fn periods(&self) -> usize {
        self.stages.len() - 1
    }

    /// `ln B_s(M)` for `|M| = s`.
    pub fn log_marginal(&self, m: &TypeVector) -> f64 {
        let (indexer, values) = &self.stages[m.total()];
        values[indexer.rank(m.counts())]
    }

    /// `ln alpha_tk(N)` for `|N| = t < T`.
    pub fn log_alpha_tk(&self, k: usize, n: &TypeVector) -> f64 {
        let mut counts = n.counts().to_vec();
        counts[k] += 1;
        self.log_marginal(&TypeVector::new(counts))
    }

    /// Replicating portfolio after the prefix summarized by `sigma`.
    pub fn portfolio(&self, sigma: &SigmaTable) -> ReplicatedPortfolio {
        let t = sigma.stage();
        assert!(t < self.periods(), "stage {t} is past the horizon");
        let (upper_idx, upper) = &self.stages[t + 1];
        let mut above = vec![0usize; self.assets];
        let mut accs = vec![LogAccumulator::new(); self.assets];
        for (counts, ls) in sigma.indexer().iter().zip(sigma.log_values()) {
            if *ls == f64::NEG_INFINITY {
                continue;
            }
            above.copy_from_slice(&counts);
            for (k, acc) in accs.iter_mut().enumerate() {
                above[k] += 1;
                acc.add(upper[upper_idx.rank(&above)] + ls);
                above[k] -= 1;
            }
        }
        portfolio_from_log(accs.iter().map(LogAccumulator::value).collect())
    }

    /// `ln W(x^t) = ln sum_N B_t(N) sigma(N; x^t)`: log-wealth of the
    /// replicating strategy after the prefix summarized by `sigma`.
    pub fn log_wealth(&self, sigma: &SigmaTable) -> f64 {
        let (_, values) = &self.stages[sigma.stage()];
        let mut acc = LogAccumulator::new();
        for (b, ls) in values.iter().zip(sigma.log_values()) {
            acc.add(b + ls);
        }
        acc.value()
    }
}

/// `alpha(n) = prod_k (n_k/T)^{n_k} / p(T, m)`; the deposit is `p(T, m)`.
pub fn prior_cover_ordentlich(periods: usize, assets: usize) -> Result<MultilinearCoefficients> {
    if periods == 0 || assets == 0 {
        return Err(Error::InvalidArgument("prior needs T >= 1 and m >= 1".into()));
    }
    check_symmetric_budget(periods, assets)?;
    let price = PriceRecurrence::new(assets).price(periods, assets);
    let log_price = price.ln();
    let log_weights = TypeIndexer::new(periods, assets)
        .iter()
        .map(|n| log_vertex_value(&n) - log_price)
        .collect();
    MultilinearCoefficients::symmetric_from_log(periods, assets, log_weights, price)
}

/// Equal money in every type class, split evenly within the class:
/// `alpha(n) = 1 / (C(T+m-1, m-1) multinomial(T; n))`. The deposit that makes
/// it a superhedge of the hindsight benchmark is `C(T+m-1, m-1)`.
pub fn prior_cover_uniform(periods: usize, assets: usize) -> Result<MultilinearCoefficients> {
    if periods == 0 || assets == 0 {
        return Err(Error::InvalidArgument("prior needs T >= 1 and m >= 1".into()));
    }
    check_symmetric_budget(periods, assets)?;
    let lf = LogFactorialTable::new(periods + assets);
    let log_classes = lf.log_binomial(periods + assets - 1, assets - 1);
    let log_weights = TypeIndexer::new(periods, assets)
        .iter()
        .map(|n| -log_classes - lf.log_multinomial(&n))
        .collect();
    MultilinearCoefficients::symmetric_from_log(periods, assets, log_weights, log_classes.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::ReturnMatrix;
    use crate::multilinear::for_each_tuple;

    fn rm(rows: &[&[f64]]) -> ReturnMatrix {
        ReturnMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn tv(c: &[usize]) -> TypeVector {
        TypeVector::new(c.to_vec())
    }

    #[test]
    fn sigma_by_hand() {
        let x = rm(&[&[2.0, 1.0], &[0.5, 3.0]]);
        let s0 = SigmaTable::new(2).unwrap();
        let s1 = sigma_advance(&s0, x.history(), 1).unwrap();
        assert!((s1.get(&tv(&[1, 0])) - 2.0).abs() < 1e-15);
        assert!((s1.get(&tv(&[0, 1])) - 1.0).abs() < 1e-15);
        let s2 = sigma_advance(&s1, x.history(), 2).unwrap();
        assert!((s2.get(&tv(&[2, 0])) - 1.0).abs() < 1e-14);
        assert!((s2.get(&tv(&[1, 1])) - 6.5).abs() < 1e-14);
        assert!((s2.get(&tv(&[0, 2])) - 3.0).abs() < 1e-14);
        assert!(matches!(sigma_advance(&s0, x.history(), 2), Err(Error::StageMismatch { .. })));
    }

    #[test]
    fn sigma_counts_tuples_on_flat_market() {
        let s = SigmaTable::from_history(ReturnMatrix::ones(5, 3).history()).unwrap();
        let lf = LogFactorialTable::new(5);
        for n in s.indexer().iter() {
            let expected = lf.log_multinomial(&n).exp();
            assert!((s.get(&TypeVector::new(n.clone())) - expected).abs() < 1e-10 * expected);
        }
    }

    #[test]
    fn single_asset_sigma_is_product() {
        let x = rm(&[&[1.5], &[0.5], &[3.0]]);
        let s = SigmaTable::from_history(x.history()).unwrap();
        assert!((s.get(&tv(&[3])) - 2.25).abs() < 1e-14);
    }

    #[test]
    fn priors_for_two_periods() {
        let co = prior_cover_ordentlich(2, 2).unwrap();
        assert!((co.type_weight(&tv(&[2, 0])) - 0.4).abs() < 1e-12);
        assert!((co.type_weight(&tv(&[0, 2])) - 0.4).abs() < 1e-12);
        assert!((co.type_weight(&tv(&[1, 1])) - 0.1).abs() < 1e-12);
        assert!((co.scale() - 2.5).abs() < 1e-12);

        let uni = prior_cover_uniform(2, 2).unwrap();
        assert!((uni.type_weight(&tv(&[2, 0])) - 1.0 / 3.0).abs() < 1e-12);
        assert!((uni.type_weight(&tv(&[1, 1])) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn one_period_priors_coincide() {
        for m in 1..=5 {
            let co = prior_cover_ordentlich(1, m).unwrap();
            let uni = prior_cover_uniform(1, m).unwrap();
            for k in 0..m {
                let mut c = vec![0; m];
                c[k] = 1;
                assert!((co.type_weight(&tv(&c)) - 1.0 / m as f64).abs() < 1e-14);
                assert!((uni.type_weight(&tv(&c)) - 1.0 / m as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn uniform_prior_splits_money_by_class() {
        let uni = prior_cover_uniform(4, 3).unwrap();
        let lf = LogFactorialTable::new(4);
        for n in TypeIndexer::new(4, 3).iter() {
            let money = lf.log_multinomial(&n).exp() * uni.type_weight(&TypeVector::new(n));
            assert!((money - 1.0 / 15.0).abs() < 1e-14);
        }
    }

    #[test]
    fn marginal_alpha_by_hand() {
        let co = prior_cover_ordentlich(2, 2).unwrap();
        assert!((marginal_alpha(&co, 0, 0, &tv(&[0, 0])).unwrap() - 0.5).abs() < 1e-12);
        // last stage: single term
        assert!((marginal_alpha(&co, 1, 0, &tv(&[1, 0])).unwrap() - 0.4).abs() < 1e-12);
        assert!((marginal_alpha(&co, 1, 1, &tv(&[1, 0])).unwrap() - 0.1).abs() < 1e-12);
        let uni = prior_cover_uniform(5, 3).unwrap();
        let a = marginal_alpha(&uni, 2, 0, &tv(&[1, 0, 1])).unwrap();
        let b = marginal_alpha(&uni, 2, 2, &tv(&[1, 0, 1])).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn table_matches_direct_marginals() {
        for (t_max, m) in [(5, 2), (4, 3), (3, 4)] {
            for alpha in [prior_cover_ordentlich(t_max, m).unwrap(), prior_cover_uniform(t_max, m).unwrap()] {
                let table = MarginalTable::new(&alpha).unwrap();
                for t in 0..t_max {
                    for n in TypeIndexer::new(t, m).iter() {
                        let n = TypeVector::new(n);
                        for k in 0..m {
                            let direct = marginal_alpha(&alpha, t, k, &n).unwrap();
                            let fast = table.log_alpha_tk(k, &n).exp();
                            assert!((direct - fast).abs() <= 1e-13 * direct.max(1e-300));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn portfolio_after_one_period() {
        let co = prior_cover_ordentlich(2, 2).unwrap();
        let x = rm(&[&[2.0, 1.0]]);
        let sigma = SigmaTable::from_history(x.history()).unwrap();
        let p = symmetric_portfolio(&co, &sigma).unwrap();
        assert!((p.portfolio.weights()[0] - 0.6).abs() < 1e-12);
        let q = MarginalTable::new(&co).unwrap().portfolio(&sigma);
        assert!((q.portfolio.weights()[0] - 0.6).abs() < 1e-12);
        let start = symmetric_portfolio(&co, &SigmaTable::new(2).unwrap()).unwrap();
        assert!((start.portfolio.weights()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sigma_matches_enumeration() {
        let x = rm(&[&[1.2, 0.5, 2.0], &[0.3, 1.1, 0.9], &[2.2, 0.0, 1.0], &[1.0, 1.7, 0.4]]);
        let sigma = SigmaTable::from_history(x.history()).unwrap();
        let mut brute = std::collections::HashMap::new();
        for_each_tuple(4, 3, |t| {
            let p: f64 = t.iter().enumerate().map(|(s, &j)| x.row(s)[j]).product();
            *brute.entry(TypeVector::of_tuple(t, 3)).or_insert(0.0) += p;
        });
        for (n, v) in brute {
            assert!((sigma.get(&n) - v).abs() <= 1e-13 * v.max(1.0), "{n}");
        }
    }

    #[test]
    fn symmetric_engine_rejects_many_assets() {
        assert!(prior_cover_ordentlich(3, 7).is_err());
        assert!(SigmaTable::new(7).is_err());
    }
}
