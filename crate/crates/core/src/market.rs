//! Market primitives: gross-return paths, portfolio vectors, trading
//! strategies and the wealth they induce on a $1 deposit.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric;

/// Tolerance within which portfolio weights are silently renormalized.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// A `T x m` path of nonnegative gross returns. No row is all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnMatrix {
    data: Vec<f64>,
    assets: usize,
}

impl ReturnMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let assets = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * assets);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != assets {
                return Err(Error::InvalidReturns(format!(
                    "row {} has {} entries, expected {}",
                    t + 1,
                    row.len(),
                    assets
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, assets)
    }

    /// Builds a matrix from row-major data.
    pub fn from_flat(data: Vec<f64>, assets: usize) -> Result<Self> {
        if assets == 0 || data.is_empty() {
            return Err(Error::InvalidReturns(
                "need at least one period and one asset".into(),
            ));
        }
        if !data.len().is_multiple_of(assets) {
            return Err(Error::InvalidReturns(format!(
                "{} values do not form rows of {} assets",
                data.len(),
                assets
            )));
        }
        for (t, row) in data.chunks(assets).enumerate() {
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidReturns(format!(
                    "row {} contains invalid gross return {}",
                    t + 1,
                    v
                )));
            }
            if row.iter().all(|v| *v == 0.0) {
                return Err(Error::InvalidReturns(format!("row {} is all zero", t + 1)));
            }
        }
        Ok(Self { data, assets })
    }

    /// The flat market: every gross return equals one.
    pub fn ones(periods: usize, assets: usize) -> Self {
        assert!(periods > 0 && assets > 0);
        Self {
            data: vec![1.0; periods * assets],
            assets,
        }
    }

    /// The Kelly sequence `(e_{j_1}, ..., e_{j_T})` for a tuple of asset indices.
    pub fn kelly_sequence(tuple: &[usize], assets: usize) -> Self {
        assert!(!tuple.is_empty() && assets > 0);
        let mut data = vec![0.0; tuple.len() * assets];
        for (t, &j) in tuple.iter().enumerate() {
            assert!(j < assets, "asset index {j} out of range");
            data[t * assets + j] = 1.0;
        }
        Self { data, assets }
    }

    pub fn periods(&self) -> usize {
        self.data.len() / self.assets
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.assets..(t + 1) * self.assets]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + Clone {
        self.data.chunks_exact(self.assets)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn history(&self) -> History<'_> {
        History {
            data: &self.data,
            assets: self.assets,
        }
    }

    /// The first `t` rows as a history (possibly empty).
    pub fn prefix(&self, t: usize) -> History<'_> {
        self.history().prefix(t)
    }

    /// Copy of the first `t >= 1` rows.
    pub fn truncated(&self, t: usize) -> Self {
        assert!(t >= 1 && t <= self.periods());
        Self {
            data: self.data[..t * self.assets].to_vec(),
            assets: self.assets,
        }
    }

    /// Returns a copy with row `t` multiplied by `factor > 0`.
    pub fn with_scaled_row(&self, t: usize, factor: f64) -> Self {
        assert!(factor > 0.0);
        let mut out = self.clone();
        for v in &mut out.data[t * self.assets..(t + 1) * self.assets] {
            *v *= factor;
        }
        out
    }

    /// Returns a copy with rows reordered: row `i` of the result is row `order[i]`.
    pub fn with_row_order(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.periods());
        let mut data = Vec::with_capacity(self.data.len());
        for &t in order {
            data.extend_from_slice(self.row(t));
        }
        Self {
            data,
            assets: self.assets,
        }
    }

    /// Returns a copy with `row` appended.
    pub fn with_row(&self, row: &[f64]) -> Result<Self> {
        Error::check_assets(self.assets, row.len())?;
        let mut data = self.data.clone();
        data.extend_from_slice(row);
        Self::from_flat(data, self.assets)
    }
}

/// A borrowed prefix `x^t` of a return path. May be empty (`h^0`).
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    data: &'a [f64],
    assets: usize,
}

impl<'a> History<'a> {
    pub fn empty(assets: usize) -> Self {
        Self { data: &[], assets }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.assets
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn row(&self, t: usize) -> &'a [f64] {
        &self.data[t * self.assets..(t + 1) * self.assets]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'a, f64> {
        self.data.chunks_exact(self.assets)
    }

    pub fn prefix(&self, t: usize) -> History<'a> {
        History {
            data: &self.data[..t * self.assets],
            assets: self.assets,
        }
    }

    pub fn as_flat(&self) -> &'a [f64] {
        self.data
    }
}

/// A point of the portfolio simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioVector(Vec<f64>);

impl PortfolioVector {
    /// Accepts nonnegative weights whose sum is within `1e-9` of one and
    /// renormalizes them; rejects anything further off.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPortfolio("no assets".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidPortfolio(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::InvalidPortfolio(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    /// Normalizes arbitrary nonnegative weights with a positive sum.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidPortfolio(format!("invalid weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidPortfolio("weights have no positive mass".into()));
        }
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(assets: usize) -> Self {
        assert!(assets > 0);
        Self(vec![1.0 / assets as f64; assets])
    }

    pub fn vertex(k: usize, assets: usize) -> Self {
        assert!(k < assets);
        let mut w = vec![0.0; assets];
        w[k] = 1.0;
        Self(w)
    }

    pub fn assets(&self) -> usize {
        self.0.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `<c, x>` for a gross-return row.
    pub fn dot(&self, row: &[f64]) -> f64 {
        self.0.iter().zip(row).map(|(c, x)| c * x).sum()
    }
}

/// A deterministic map from return histories to portfolios.
pub trait TradingStrategy {
    fn assets(&self) -> usize;

    /// Number of periods the strategy is defined for; `None` means any.
    fn horizon(&self) -> Option<usize> {
        None
    }

    fn portfolio_at(&self, history: History<'_>) -> PortfolioVector;
}

impl<S: TradingStrategy + ?Sized> TradingStrategy for &S {
    fn assets(&self) -> usize {
        (**self).assets()
    }
    fn horizon(&self) -> Option<usize> {
        (**self).horizon()
    }
    fn portfolio_at(&self, history: History<'_>) -> PortfolioVector {
        (**self).portfolio_at(history)
    }
}

impl<S: TradingStrategy + ?Sized> TradingStrategy for Box<S> {
    fn assets(&self) -> usize {
        (**self).assets()
    }
    fn horizon(&self) -> Option<usize> {
        (**self).horizon()
    }
    fn portfolio_at(&self, history: History<'_>) -> PortfolioVector {
        (**self).portfolio_at(history)
    }
}

impl<S: TradingStrategy + ?Sized> TradingStrategy for Arc<S> {
    fn assets(&self) -> usize {
        (**self).assets()
    }
    fn horizon(&self) -> Option<usize> {
        (**self).horizon()
    }
    fn portfolio_at(&self, history: History<'_>) -> PortfolioVector {
        (**self).portfolio_at(history)
    }
}

fn check_strategy<S: TradingStrategy + ?Sized>(strategy: &S, periods: usize, assets: usize) -> Result<()> {
    Error::check_assets(strategy.assets(), assets)?;
    match strategy.horizon() {
        Some(h) if h < periods => Err(Error::HorizonTooShort {
            horizon: h,
            periods,
        }),
        _ => Ok(()),
    }
}

/// Final wealth `prod_t <theta(x^{t-1}), x_t>` of a $1 deposit.
pub fn wealth_of_strategy<S: TradingStrategy + ?Sized>(strategy: &S, x: &ReturnMatrix) -> Result<f64> {
    wealth_over_history(strategy, x.history())
}

/// Like [`wealth_of_strategy`] but over a possibly empty history (empty gives 1).
pub fn wealth_over_history<S: TradingStrategy + ?Sized>(strategy: &S, history: History<'_>) -> Result<f64> {
    check_strategy(strategy, history.len(), history.assets())?;
    let factors = (0..history.len()).map(|t| strategy.portfolio_at(history.prefix(t)).dot(history.row(t)));
    Ok(numeric::product(factors, history.len()))
}

/// Wealth after each period: element `t` is the wealth after `t + 1` periods.
pub fn wealth_path<S: TradingStrategy + ?Sized>(strategy: &S, x: &ReturnMatrix) -> Result<Vec<f64>> {
    check_strategy(strategy, x.periods(), x.assets())?;
    let mut wealth = 1.0;
    Ok((0..x.periods())
        .map(|t| {
            wealth *= strategy.portfolio_at(x.prefix(t)).dot(x.row(t));
            wealth
        })
        .collect())
}

/// Constant-rebalanced portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantRebalanced(pub PortfolioVector);

impl TradingStrategy for ConstantRebalanced {
    fn assets(&self) -> usize {
        self.0.assets()
    }
    fn portfolio_at(&self, _history: History<'_>) -> PortfolioVector {
        self.0.clone()
    }
}

/// `prod_t <c, x_t>`.
pub fn crp_wealth(c: &PortfolioVector, x: &ReturnMatrix) -> Result<f64> {
    Error::check_assets(c.assets(), x.assets())?;
    Ok(numeric::product(x.rows().map(|row| c.dot(row)), x.periods()))
}

/// Strategy holding `first` and `second` with deposits in the ratio
/// `first_deposit : second_deposit`, letting each sub-account ride.
#[derive(Debug, Clone)]
pub struct Blend<A, B> {
    first_deposit: f64,
    second_deposit: f64,
    first: A,
    second: B,
}

impl<A: TradingStrategy, B: TradingStrategy> Blend<A, B> {
    pub fn with_deposits(first_deposit: f64, second_deposit: f64, first: A, second: B) -> Result<Self> {
        if !(first_deposit >= 0.0 && second_deposit >= 0.0 && first_deposit + second_deposit > 0.0)
            || !(first_deposit + second_deposit).is_finite()
        {
            return Err(Error::InvalidArgument(format!(
                "deposits ({first_deposit}, {second_deposit}) must be nonnegative with positive sum"
            )));
        }
        Error::check_assets(first.assets(), second.assets())?;
        if first.horizon() != second.horizon() {
            return Err(Error::InvalidArgument("blended strategies have different horizons".into()));
        }
        Ok(Self {
            first_deposit,
            second_deposit,
            first,
            second,
        })
    }
}

/// `lambda` of wealth into `theta`, the rest into `psi`.
pub fn blend_strategies<A: TradingStrategy, B: TradingStrategy>(lambda: f64, theta: A, psi: B) -> Result<Blend<A, B>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside [0, 1]")));
    }
    Blend::with_deposits(lambda, 1.0 - lambda, theta, psi)
}

impl<A: TradingStrategy, B: TradingStrategy> TradingStrategy for Blend<A, B> {
    fn assets(&self) -> usize {
        self.first.assets()
    }

    fn horizon(&self) -> Option<usize> {
        self.first.horizon()
    }

    fn portfolio_at(&self, history: History<'_>) -> PortfolioVector {
        let theta = self.first.portfolio_at(history);
        let psi = self.second.portfolio_at(history);
        let a = self.first_deposit * wealth_over_history(&self.first, history).unwrap_or(0.0);
        let b = self.second_deposit * wealth_over_history(&self.second, history).unwrap_or(0.0);
        let total = a + b;
        if total <= 0.0 {
            return theta;
        }
        let weights = theta
            .weights()
            .iter()
            .zip(psi.weights())
            .map(|(t, p)| (a * t + b * p) / total)
            .collect();
        PortfolioVector::from_unnormalized(weights).unwrap_or(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    PriceWeighted,
    CapWeighted,
    EqualWeight,
}

/// Market index strategies. Price- and cap-weighted indexes buy a fixed
/// number of shares and hold; the equal-weight index rebalances to `1/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexStrategy {
    kind: IndexKind,
    /// Initial dollar holdings per asset (`shares * S_0`), unnormalized.
    holdings: Vec<f64>,
}

/// Builds an index strategy. `initial_prices` fixes `m` (and the holdings of the
/// price/cap-weighted kinds); `shares` is required for the cap-weighted kind.
pub fn index_strategy(kind: IndexKind, initial_prices: &[f64], shares: Option<&[f64]>) -> Result<IndexStrategy> {
    if initial_prices.is_empty() {
        return Err(Error::InvalidArgument("index needs at least one asset".into()));
    }
    for (j, &p) in initial_prices.iter().enumerate() {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::NonPositivePrice { row: 0, asset: j, value: p });
        }
    }
    let holdings = match kind {
        IndexKind::EqualWeight => vec![1.0; initial_prices.len()],
        IndexKind::PriceWeighted => initial_prices.to_vec(),
        IndexKind::CapWeighted => {
            let shares = shares.ok_or_else(|| {
                Error::InvalidArgument("cap-weighted index requires share counts".into())
            })?;
            Error::check_assets(initial_prices.len(), shares.len())?;
            if let Some(n) = shares.iter().find(|n| !(**n > 0.0 && n.is_finite())) {
                return Err(Error::InvalidArgument(format!("share count {n} must be positive")));
            }
            initial_prices.iter().zip(shares).map(|(p, n)| p * n).collect()
        }
    };
    Ok(IndexStrategy { kind, holdings })
}

impl IndexStrategy {
    pub fn kind(&self) -> IndexKind {
        self.kind
    }
}

impl TradingStrategy for IndexStrategy {
    fn assets(&self) -> usize {
        self.holdings.len()
    }

    fn portfolio_at(&self, history: History<'_>) -> PortfolioVector {
        if self.kind == IndexKind::EqualWeight {
            return PortfolioVector::uniform(self.holdings.len());
        }
        let mut values = self.holdings.clone();
        for row in history.rows() {
            for (v, x) in values.iter_mut().zip(row) {
                *v *= x;
            }
        }
        PortfolioVector::from_unnormalized(values).unwrap_or_else(|_| PortfolioVector::uniform(self.holdings.len()))
    }
}

/// Share prices `S_{tj}` with optional per-period dividends `delta_{tj}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub initial_prices: Vec<f64>,
    pub prices: Vec<Vec<f64>>,
    pub dividends: Option<Vec<Vec<f64>>>,
}

impl PriceTable {
    pub fn new(initial_prices: Vec<f64>, prices: Vec<Vec<f64>>, dividends: Option<Vec<Vec<f64>>>) -> Self {
        Self {
            initial_prices,
            prices,
            dividends,
        }
    }

    pub fn assets(&self) -> usize {
        self.initial_prices.len()
    }

    /// Column `j`: prices after `S_0`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.prices.iter().map(|row| row[j]).collect()
    }
}

/// `x_{tj} = (S_{tj} + delta_{tj}) / S_{t-1,j}`.
pub fn returns_from_prices(table: &PriceTable) -> Result<ReturnMatrix> {
    let m = table.assets();
    if m == 0 || table.prices.is_empty() {
        return Err(Error::InvalidReturns("price table needs an initial row and at least one more".into()));
    }
    let check = |row: usize, values: &[f64]| -> Result<()> {
        Error::check_assets(m, values.len())?;
        for (asset, &value) in values.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::NonPositivePrice { row, asset, value });
            }
        }
        Ok(())
    };
    check(0, &table.initial_prices)?;
    if let Some(div) = &table.dividends {
        if div.len() != table.prices.len() {
            return Err(Error::InvalidArgument(format!(
                "{} dividend rows for {} price rows",
                div.len(),
                table.prices.len()
            )));
        }
    }
    let mut data = Vec::with_capacity(table.prices.len() * m);
    let mut previous = table.initial_prices.as_slice();
    for (t, row) in table.prices.iter().enumerate() {
        check(t + 1, row)?;
        let dividends = table.dividends.as_ref().map(|d| d[t].as_slice());
        if let Some(d) = dividends {
            Error::check_assets(m, d.len())?;
            if let Some(v) = d.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument(format!("invalid dividend {v} at row {}", t + 1)));
            }
        }
        for j in 0..m {
            let div = dividends.map_or(0.0, |d| d[j]);
            data.push((row[j] + div) / previous[j]);
        }
        previous = row;
    }
    ReturnMatrix::from_flat(data, m)
}
