//! Multilinear payoffs `scale * sum_{j^T} alpha(j^T) x_{1 j_1} ... x_{T j_T}`:
//! exact replication, minimum-cost superhedges of multiconvex benchmarks, and
//! the type-class engine for symmetric weights.

use std::sync::Arc;

use crate::benchmarks::PayoffEvaluator;
use crate::error::{Error, Result};
use crate::market::{History, PortfolioVector, ReturnMatrix, TradingStrategy};
use crate::numeric::LogAccumulator;
use crate::pricing::LogFactorialTable;

pub mod symmetric;
pub mod types;

pub use symmetric::{
    marginal_alpha, prior_cover_ordentlich, prior_cover_uniform, sigma_advance, symmetric_portfolio, MarginalTable,
    SigmaTable,
};
pub use types::{for_each_tuple, type_class_count, TypeIndexer, TypeVector};

/// Largest number of index tuples the dense engine will enumerate.
pub const DENSE_TUPLE_BUDGET: u64 = 10_000_000;
/// Largest asset count accepted by the type-class engine.
pub const SYMMETRIC_MAX_ASSETS: usize = 6;
/// Largest number of type classes (per stage) the type-class engine will store.
pub const SYMMETRIC_TYPE_BUDGET: u64 = 10_000_000;

const NORMALIZATION_TOLERANCE: f64 = 1e-10;

/// `m^T`, or `None` on overflow.
pub fn tuple_count(periods: usize, assets: usize) -> Option<u64> {
    (assets as u64).checked_pow(u32::try_from(periods).ok()?)
}

fn check_dense_budget(periods: usize, assets: usize) -> Result<usize> {
    match tuple_count(periods, assets) {
        Some(n) if n <= DENSE_TUPLE_BUDGET => Ok(n as usize),
        _ => Err(Error::budget(
            format!("{assets}^{periods} index tuples"),
            DENSE_TUPLE_BUDGET,
            "use symmetric (type-class) coefficients",
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientMode {
    Dense,
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
enum Weights {
    /// Indexed by tuple, first period most significant.
    Dense(Vec<f64>),
    /// `ln alpha(n)` indexed by [`TypeIndexer`] rank at total `T`.
    Symmetric(Vec<f64>),
}

/// Nonnegative weights over extremal strategies plus the deposit `p*[D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearCoefficients {
    periods: usize,
    assets: usize,
    scale: f64,
    weights: Weights,
}

impl MultilinearCoefficients {
    /// Dense weights over all `m^T` tuples; must sum to one.
    pub fn dense(periods: usize, assets: usize, weights: Vec<f64>, scale: f64) -> Result<Self> {
        check_shape(periods, assets, scale)?;
        let n = check_dense_budget(periods, assets)?;
        if weights.len() != n {
            return Err(Error::InvalidArgument(format!("expected {n} dense weights, got {}", weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidArgument(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidArgument(format!("dense weights sum to {total}, not 1")));
        }
        Ok(Self {
            periods,
            assets,
            scale,
            weights: Weights::Dense(weights),
        })
    }

    /// Symmetric weights given as `ln alpha(n)` in [`TypeIndexer`] order for
    /// total `T`; `sum_n multinomial(T; n) alpha(n)` must equal one.
    pub fn symmetric_from_log(periods: usize, assets: usize, log_weights: Vec<f64>, scale: f64) -> Result<Self> {
        check_shape(periods, assets, scale)?;
        check_symmetric_budget(periods, assets)?;
        let indexer = TypeIndexer::new(periods, assets);
        if log_weights.len() != indexer.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} type weights, got {}",
                indexer.len(),
                log_weights.len()
            )));
        }
        if let Some(w) = log_weights.iter().find(|w| w.is_nan() || **w == f64::INFINITY) {
            return Err(Error::InvalidArgument(format!("invalid log weight {w}")));
        }
        let lf = LogFactorialTable::new(periods);
        let mut acc = LogAccumulator::new();
        for (n, lw) in indexer.iter().zip(&log_weights) {
            acc.add(lf.log_multinomial(&n) + lw);
        }
        let total = acc.value().exp();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "symmetric weights carry total mass {total}, not 1"
            )));
        }
        Ok(Self {
            periods,
            assets,
            scale,
            weights: Weights::Symmetric(log_weights),
        })
    }

    /// Symmetric weights from a function of the type.
    pub fn symmetric(periods: usize, assets: usize, scale: f64, weight: impl Fn(&TypeVector) -> f64) -> Result<Self> {
        check_symmetric_budget(periods, assets)?;
        let log_weights = TypeIndexer::new(periods, assets)
            .iter()
            .map(|n| weight(&TypeVector::new(n)).ln())
            .collect();
        Self::symmetric_from_log(periods, assets, log_weights, scale)
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    /// The deposit `p*[D]` that scales the unit-deposit wealth to the payoff.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mode(&self) -> CoefficientMode {
        match self.weights {
            Weights::Dense(_) => CoefficientMode::Dense,
            Weights::Symmetric(_) => CoefficientMode::Symmetric,
        }
    }

    /// `alpha(j^T)` for an index tuple in either mode.
    pub fn weight(&self, tuple: &[usize]) -> f64 {
        assert_eq!(tuple.len(), self.periods);
        match &self.weights {
            Weights::Dense(w) => w[tuple_index(tuple, self.assets)],
            Weights::Symmetric(_) => self.log_type_weight(&TypeVector::of_tuple(tuple, self.assets)).exp(),
        }
    }

    /// `ln alpha(n)` in symmetric mode. Panics in dense mode.
    pub fn log_type_weight(&self, n: &TypeVector) -> f64 {
        match &self.weights {
            Weights::Symmetric(w) => w[TypeIndexer::new(self.periods, self.assets).rank(n.counts())],
            Weights::Dense(_) => panic!("type weights are only defined for symmetric coefficients"),
        }
    }

    pub fn type_weight(&self, n: &TypeVector) -> f64 {
        self.log_type_weight(n).exp()
    }

    pub(crate) fn symmetric_log_weights(&self) -> Option<&[f64]> {
        match &self.weights {
            Weights::Symmetric(w) => Some(w),
            Weights::Dense(_) => None,
        }
    }

    /// Expands to dense weights (subject to the dense budget).
    pub fn to_dense(&self) -> Result<Self> {
        match &self.weights {
            Weights::Dense(_) => Ok(self.clone()),
            Weights::Symmetric(log_w) => {
                check_dense_budget(self.periods, self.assets)?;
                let indexer = TypeIndexer::new(self.periods, self.assets);
                let mut weights = Vec::new();
                for_each_tuple(self.periods, self.assets, |tuple| {
                    let n = TypeVector::of_tuple(tuple, self.assets);
                    weights.push(log_w[indexer.rank(n.counts())].exp());
                });
                Ok(Self {
                    periods: self.periods,
                    assets: self.assets,
                    scale: self.scale,
                    weights: Weights::Dense(weights),
                })
            }
        }
    }
}

fn check_shape(periods: usize, assets: usize, scale: f64) -> Result<()> {
    if periods == 0 || assets == 0 {
        return Err(Error::InvalidArgument("coefficients need T >= 1 and m >= 1".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale {scale} must be positive")));
    }
    Ok(())
}

pub(crate) fn check_symmetric_budget(periods: usize, assets: usize) -> Result<()> {
    if assets > SYMMETRIC_MAX_ASSETS {
        return Err(Error::budget(
            format!("{assets} assets"),
            SYMMETRIC_MAX_ASSETS as u64,
            "the type-class engine supports at most 6 assets",
        ));
    }
    match type_class_count(periods, assets) {
        Some(n) if n <= SYMMETRIC_TYPE_BUDGET => Ok(()),
        _ => Err(Error::budget(
            format!("type classes for T={periods}, m={assets}"),
            SYMMETRIC_TYPE_BUDGET,
            "shorten the horizon",
        )),
    }
}

fn tuple_index(tuple: &[usize], assets: usize) -> usize {
    tuple.iter().fold(0, |acc, &j| acc * assets + j)
}

/// Products `x_{1 j_1} ... x_{t j_t}` for every `j^t`, in tuple order.
fn extremal_wealths(history: History<'_>) -> Vec<f64> {
    let m = history.assets();
    let mut products = vec![1.0];
    for row in history.rows() {
        let mut next = Vec::with_capacity(products.len() * m);
        for p in &products {
            next.extend(row.iter().map(|x| p * x));
        }
        products = next;
    }
    products
}

/// A replicating portfolio plus a flag for prefixes where every surviving
/// extremal wealth is zero (the portfolio is then uniform by convention).
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatedPortfolio {
    pub portfolio: PortfolioVector,
    pub degenerate: bool,
}

impl ReplicatedPortfolio {
    pub(crate) fn from_weights(weights: Vec<f64>) -> Self {
        let assets = weights.len();
        match PortfolioVector::from_unnormalized(weights) {
            Ok(portfolio) => Self {
                portfolio,
                degenerate: false,
            },
            Err(_) => Self::degenerate(assets),
        }
    }

    pub(crate) fn degenerate(assets: usize) -> Self {
        Self {
            portfolio: PortfolioVector::uniform(assets),
            degenerate: true,
        }
    }
}

fn check_prefix(alpha: &MultilinearCoefficients, prefix: History<'_>) -> Result<()> {
    Error::check_assets(alpha.assets, prefix.assets())?;
    if prefix.len() >= alpha.periods {
        return Err(Error::InvalidArgument(format!(
            "prefix length {} must be below the horizon {}",
            prefix.len(),
            alpha.periods
        )));
    }
    Ok(())
}

/// `theta_k(x^t)`: the share of wealth in asset `k` that replicates the
/// multilinear payoff after observing `prefix`.
pub fn replicating_portfolio(alpha: &MultilinearCoefficients, prefix: History<'_>) -> Result<ReplicatedPortfolio> {
    check_prefix(alpha, prefix)?;
    match &alpha.weights {
        Weights::Dense(weights) => {
            let m = alpha.assets;
            let t = prefix.len();
            let block = m.pow((alpha.periods - t - 1) as u32);
            let products = extremal_wealths(prefix);
            let mut numerators = vec![0.0; m];
            for (i, p) in products.iter().enumerate() {
                if *p == 0.0 {
                    continue;
                }
                for (k, num) in numerators.iter_mut().enumerate() {
                    let start = (i * m + k) * block;
                    let marginal: f64 = weights[start..start + block].iter().sum();
                    *num += p * marginal;
                }
            }
            Ok(ReplicatedPortfolio::from_weights(numerators))
        }
        Weights::Symmetric(_) => {
            let sigma = SigmaTable::from_history(prefix)?;
            symmetric_portfolio(alpha, &sigma)
        }
    }
}

/// `sum_{j^T} alpha(j^T) prod_t x_{t j_t}`: the unit-deposit wealth of the
/// replicating strategy.
pub fn wealth_of_coefficients(alpha: &MultilinearCoefficients, x: &ReturnMatrix) -> Result<f64> {
    Error::check_assets(alpha.assets, x.assets())?;
    if x.periods() != alpha.periods {
        return Err(Error::InvalidArgument(format!(
            "coefficients span {} periods, path has {}",
            alpha.periods,
            x.periods()
        )));
    }
    match &alpha.weights {
        Weights::Dense(weights) => Ok(extremal_wealths(x.history())
            .iter()
            .zip(weights)
            .map(|(p, w)| p * w)
            .sum()),
        Weights::Symmetric(log_weights) => {
            let sigma = SigmaTable::from_history(x.history())?;
            let mut acc = LogAccumulator::new();
            for (lw, ls) in log_weights.iter().zip(sigma.log_values()) {
                acc.add(lw + ls);
            }
            Ok(acc.value().exp())
        }
    }
}

/// The self-financing strategy that replicates a multilinear payoff.
#[derive(Debug, Clone)]
pub struct ReplicatingStrategy {
    coefficients: Arc<MultilinearCoefficients>,
    marginals: Option<Arc<MarginalTable>>,
}

impl ReplicatingStrategy {
    pub fn new(coefficients: MultilinearCoefficients) -> Result<Self> {
        let marginals = match coefficients.mode() {
            CoefficientMode::Dense => None,
            CoefficientMode::Symmetric => Some(Arc::new(MarginalTable::new(&coefficients)?)),
        };
        Ok(Self {
            coefficients: Arc::new(coefficients),
            marginals,
        })
    }

    pub fn coefficients(&self) -> &MultilinearCoefficients {
        &self.coefficients
    }

    /// Portfolio plus degeneracy flag at `prefix`.
    pub fn replicate(&self, prefix: History<'_>) -> Result<ReplicatedPortfolio> {
        check_prefix(&self.coefficients, prefix)?;
        match &self.marginals {
            Some(table) => Ok(table.portfolio(&SigmaTable::from_history(prefix)?)),
            None => replicating_portfolio(&self.coefficients, prefix),
        }
    }
}

impl TradingStrategy for ReplicatingStrategy {
    fn assets(&self) -> usize {
        self.coefficients.assets
    }

    fn horizon(&self) -> Option<usize> {
        Some(self.coefficients.periods)
    }

    fn portfolio_at(&self, history: History<'_>) -> PortfolioVector {
        self.replicate(history)
            .map(|r| r.portfolio)
            .unwrap_or_else(|_| PortfolioVector::uniform(self.coefficients.assets))
    }
}

/// The payoff `scale * sum alpha prod x`; multilinear, hence exactly hedgeable.
#[derive(Debug, Clone)]
pub struct MultilinearPayoff(pub MultilinearCoefficients);

impl PayoffEvaluator for MultilinearPayoff {
    fn periods(&self) -> usize {
        self.0.periods
    }
    fn assets(&self) -> usize {
        self.0.assets
    }
    fn evaluate(&self, x: &ReturnMatrix) -> f64 {
        self.0.scale * wealth_of_coefficients(&self.0, x).unwrap_or(0.0)
    }
    fn is_multiconvex_homogeneous(&self) -> bool {
        true
    }
    fn vertex_value(&self, tuple: &[usize]) -> f64 {
        self.0.scale * self.0.weight(tuple)
    }
    fn type_vertex_value(&self, n: &TypeVector) -> Option<f64> {
        (self.0.mode() == CoefficientMode::Symmetric).then(|| self.0.scale * self.0.type_weight(n))
    }
}

/// `sum over all m^T vertices of D(e_{j_1}, ..., e_{j_T})`: the hedging cost of
/// a replicable payoff and a lower bound on any superhedging price.
pub fn hedging_cost<P: PayoffEvaluator + ?Sized>(d: &P) -> Result<f64> {
    let (periods, assets) = (d.periods(), d.assets());
    if periods == 0 || assets == 0 {
        return Err(Error::InvalidArgument("payoff needs T >= 1 and m >= 1".into()));
    }
    let probe = TypeVector::new({
        let mut n = vec![0; assets];
        n[0] = periods;
        n
    });
    let types_ok = type_class_count(periods, assets).is_some_and(|n| n <= DENSE_TUPLE_BUDGET);
    if types_ok && d.type_vertex_value(&probe).is_some() {
        let lf = LogFactorialTable::new(periods);
        let indexer = TypeIndexer::new(periods, assets);
        let mut total = 0.0;
        for counts in indexer.iter() {
            let mut multinomial = lf.log_multinomial(&counts).exp();
            if multinomial < 1e15 {
                multinomial = multinomial.round();
            }
            let n = TypeVector::new(counts);
            total += multinomial * d.type_vertex_value(&n).unwrap_or(0.0);
        }
        return Ok(total);
    }
    check_dense_budget(periods, assets)?;
    let mut total = 0.0;
    for_each_tuple(periods, assets, |tuple| total += d.vertex_value(tuple));
    Ok(total)
}

/// Dense coefficients `alpha(j^T) = D(e_{j^T}) / p*[D]` of the unique
/// minimum-cost multilinear superhedge of a multiconvex, homogeneous payoff.
pub fn majorant_coefficients<P: PayoffEvaluator + ?Sized>(d: &P) -> Result<MultilinearCoefficients> {
    if !d.is_multiconvex_homogeneous() {
        return Err(Error::NotMulticonvex);
    }
    check_dense_budget(d.periods(), d.assets())?;
    let mut values = Vec::new();
    for_each_tuple(d.periods(), d.assets(), |tuple| values.push(d.vertex_value(tuple)));
    let cost: f64 = values.iter().sum();
    if !(cost > 0.0 && cost.is_finite()) {
        return Err(Error::ZeroDenominator("payoff vanishes on every Kelly sequence".into()));
    }
    MultilinearCoefficients::dense(d.periods(), d.assets(), values.into_iter().map(|v| v / cost).collect(), cost)
}

/// Symmetric counterpart of [`majorant_coefficients`] for payoffs that supply
/// closed-form vertex values by type.
pub fn symmetric_majorant_coefficients<P: PayoffEvaluator + ?Sized>(d: &P) -> Result<MultilinearCoefficients> {
    if !d.is_multiconvex_homogeneous() {
        return Err(Error::NotMulticonvex);
    }
    let (periods, assets) = (d.periods(), d.assets());
    check_symmetric_budget(periods, assets)?;
    let indexer = TypeIndexer::new(periods, assets);
    let mut log_values = Vec::with_capacity(indexer.len());
    for counts in indexer.iter() {
        let v = d
            .type_vertex_value(&TypeVector::new(counts))
            .ok_or_else(|| Error::InvalidArgument("payoff has no closed-form type vertex values".into()))?;
        log_values.push(v.ln());
    }
    let lf = LogFactorialTable::new(periods);
    let mut acc = LogAccumulator::new();
    for (n, lv) in indexer.iter().zip(&log_values) {
        acc.add(lf.log_multinomial(&n) + lv);
    }
    let log_cost = acc.value();
    let log_weights = log_values.into_iter().map(|v| v - log_cost).collect();
    MultilinearCoefficients::symmetric_from_log(periods, assets, log_weights, log_cost.exp())
}

fn completion_matrix(prefix: History<'_>, tail: &[usize]) -> ReturnMatrix {
    let m = prefix.assets();
    let mut data = prefix.as_flat().to_vec();
    for &j in tail {
        let mut row = vec![0.0; m];
        row[j] = 1.0;
        data.extend(row);
    }
    ReturnMatrix::from_flat(data, m).expect("completion rows are valid")
}

/// Candidate replicating portfolio computed from payoff values at partial
/// vertices. May be extraneous when `D` is not replicable; check with
/// [`verify_hedgeable`].
pub fn replicate_from_payoff<P: PayoffEvaluator + ?Sized>(d: &P, prefix: History<'_>) -> Result<PortfolioVector> {
    Error::check_assets(d.assets(), prefix.assets())?;
    let t = prefix.len();
    if t >= d.periods() {
        return Err(Error::InvalidArgument(format!(
            "prefix length {t} must be below the horizon {}",
            d.periods()
        )));
    }
    check_dense_budget(d.periods() - t, d.assets())?;
    let m = d.assets();
    let mut numerators = vec![0.0; m];
    let mut tail = vec![0usize; d.periods() - t];
    for (k, num) in numerators.iter_mut().enumerate() {
        tail[0] = k;
        for_each_tuple(d.periods() - t - 1, m, |rest| {
            tail[1..].copy_from_slice(rest);
            *num += d.evaluate(&completion_matrix(prefix, &tail));
        });
    }
    let total: f64 = numerators.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroDenominator(format!("payoff vanishes on every completion of the length-{t} prefix")));
    }
    PortfolioVector::from_unnormalized(numerators)
}

/// Outcome of checking the telescoping replication identity on samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeCheck {
    pub hedgeable: bool,
    pub max_residual: f64,
}

/// Evaluates both sides of the replicability functional equation on each
/// sample path and reports the largest relative residual.
pub fn verify_hedgeable<P: PayoffEvaluator + ?Sized>(d: &P, samples: &[ReturnMatrix], tol: f64) -> Result<HedgeCheck> {
    let cost = hedging_cost(d)?;
    let (periods, m) = (d.periods(), d.assets());
    let mut max_residual = 0.0_f64;
    for x in samples {
        Error::check_assets(m, x.assets())?;
        if x.periods() != periods {
            return Err(Error::InvalidArgument("sample horizon differs from the payoff's".into()));
        }
        let mut lhs = 1.0;
        for t in 0..periods {
            let prefix = x.prefix(t);
            let row = x.row(t);
            let (mut num, mut den) = (0.0, 0.0);
            let mut tail = vec![0usize; periods - t];
            for_each_tuple(periods - t, m, |completion| {
                tail.copy_from_slice(completion);
                let v = d.evaluate(&completion_matrix(prefix, &tail));
                num += v * row[tail[0]];
                den += v;
            });
            lhs *= if den > 0.0 { num / den } else { 0.0 };
        }
        let rhs = d.evaluate(x) / cost;
        let scale = lhs.abs().max(rhs.abs());
        let residual = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
        max_residual = max_residual.max(residual);
    }
    Ok(HedgeCheck {
        hedgeable: max_residual <= tol,
        max_residual,
    })
}
