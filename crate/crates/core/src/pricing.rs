//! Superhedging price `p(T, m)` of the best-rebalancing-rule-in-hindsight
//! payoff, Shtarkov's closed-form upper bound, and horizon solvers.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multilinear::types::{type_class_count, TypeIndexer};
use crate::numeric::{xlogx_ratio, LogAccumulator};

/// Maximum number of type classes `price_direct` will enumerate.
pub const DIRECT_TYPE_BUDGET: u64 = 10_000_000;
/// Largest horizon the exact scan will try for two assets.
pub const EXACT_SCAN_LIMIT_TWO_STOCKS: usize = 20_000;
/// Largest horizon the exact scan will try for three or more assets.
pub const EXACT_SCAN_LIMIT_MULTI: usize = 5_000;
/// Iteration cap for the fixed-point solver.
pub const FIXED_POINT_CAP: u64 = 100_000_000;

/// `ln n` and `ln n!` for `0 <= n <= max_n`.
#[derive(Debug, Clone)]
pub struct LogFactorialTable {
    logs: Vec<f64>,
    log_factorials: Vec<f64>,
}

impl LogFactorialTable {
    pub fn new(max_n: usize) -> Self {
        let mut logs = Vec::with_capacity(max_n + 1);
        let mut log_factorials = Vec::with_capacity(max_n + 1);
        logs.push(f64::NEG_INFINITY);
        log_factorials.push(0.0);
        for n in 1..=max_n {
            let l = (n as f64).ln();
            logs.push(l);
            log_factorials.push(l + log_factorials[n - 1]);
        }
        Self { logs, log_factorials }
    }

    pub fn max_n(&self) -> usize {
        self.logs.len() - 1
    }

    /// `L_n = ln n` (`-inf` for zero).
    pub fn ln(&self, n: usize) -> f64 {
        self.logs[n]
    }

    /// `LF_n = ln n!`.
    pub fn log_factorial(&self, n: usize) -> f64 {
        self.log_factorials[n]
    }

    pub fn log_binomial(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n);
        self.log_factorials[n] - self.log_factorials[k] - self.log_factorials[n - k]
    }

    /// `ln (sum n_k)! / prod n_k!`.
    pub fn log_multinomial(&self, counts: &[usize]) -> f64 {
        let total: usize = counts.iter().sum();
        counts
            .iter()
            .fold(self.log_factorials[total], |acc, &n| acc - self.log_factorials[n])
    }
}

/// Log of the closed-form vertex value `prod_k (n_k/T)^{n_k}` for a type.
pub(crate) fn log_vertex_value(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    counts.iter().map(|&n| xlogx_ratio(n, total)).sum()
}

fn check_dims(periods: usize, assets: usize) -> Result<()> {
    if periods == 0 || assets == 0 {
        return Err(Error::InvalidArgument(format!(
            "horizon and asset count must be positive (got T={periods}, m={assets})"
        )));
    }
    Ok(())
}

/// `p(T, m)` as a sum over all type classes of `multinomial * prod (n_k/T)^{n_k}`.
pub fn price_direct(periods: usize, assets: usize) -> Result<f64> {
    check_dims(periods, assets)?;
    let count = type_class_count(periods, assets);
    if count.is_none_or(|c| c > DIRECT_TYPE_BUDGET) {
        return Err(Error::budget(
            format!("type-class count C({}, {})", periods + assets - 1, assets - 1),
            DIRECT_TYPE_BUDGET,
            "use the recurrence or two-stock method",
        ));
    }
    let lf = LogFactorialTable::new(periods);
    let indexer = TypeIndexer::new(periods, assets);
    let mut acc = LogAccumulator::new();
    for n in indexer.iter() {
        acc.add(lf.log_multinomial(&n) + log_vertex_value(&n));
    }
    Ok(acc.value().exp())
}

/// Memoized table of `p(T, k)` for `k <= assets`, built with the recurrence
/// `p(T,m) = 1 + sum_{n<T} C(T,n) (n/T)^n ((T-n)/T)^{T-n} p(T-n, m-1)`.
#[derive(Debug, Clone)]
pub struct PriceRecurrence {
    assets: usize,
    lf: LogFactorialTable,
    /// `table[k-1][T-1] = p(T, k)`.
    table: Vec<Vec<f64>>,
}

impl PriceRecurrence {
    pub fn new(assets: usize) -> Self {
        assert!(assets > 0);
        Self {
            assets,
            lf: LogFactorialTable::new(0),
            table: vec![Vec::new(); assets],
        }
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn horizon(&self) -> usize {
        self.table[0].len()
    }

    fn grow_logs(&mut self, periods: usize) {
        if self.lf.max_n() < periods {
            self.lf = LogFactorialTable::new(periods.max(2 * self.lf.max_n()));
        }
    }

    /// Extends the table through horizon `periods`.
    pub fn extend_to(&mut self, periods: usize) {
        self.grow_logs(periods);
        let mut weights = Vec::new();
        while self.horizon() < periods {
            let t = self.horizon() + 1;
            self.table[0].push(1.0);
            if self.assets == 1 {
                continue;
            }
            weights.clear();
            weights.extend((0..t).map(|n| {
                (self.lf.log_binomial(t, n) + xlogx_ratio(n, t) + xlogx_ratio(t - n, t)).exp()
            }));
            for k in 1..self.assets {
                let value = if t == 1 {
                    (k + 1) as f64
                } else {
                    let prev = &self.table[k - 1];
                    1.0 + weights
                        .iter()
                        .enumerate()
                        .map(|(n, w)| w * prev[t - n - 1])
                        .sum::<f64>()
                };
                self.table[k].push(value);
            }
        }
    }

    /// `p(T, k)` for `k <= assets`, extending the table as needed.
    pub fn price(&mut self, periods: usize, assets: usize) -> f64 {
        assert!(periods >= 1 && (1..=self.assets).contains(&assets));
        self.extend_to(periods);
        self.table[assets - 1][periods - 1]
    }
}

/// `p(T, m)` via the memoized recurrence.
pub fn price_recurrence(periods: usize, assets: usize) -> Result<f64> {
    check_dims(periods, assets)?;
    let mut rec = PriceRecurrence::new(assets);
    Ok(rec.price(periods, assets))
}

fn two_stock_log_term(lf: &LogFactorialTable, periods: usize, j: usize) -> f64 {
    lf.log_binomial(periods, j) + xlogx_ratio(j, periods) + xlogx_ratio(periods - j, periods)
}

fn two_stock_folded(lf: &LogFactorialTable, periods: usize) -> f64 {
    let half = periods.div_ceil(2);
    let folded: f64 = (0..half).map(|j| two_stock_log_term(lf, periods, j).exp()).sum();
    let central = if periods.is_multiple_of(2) {
        (lf.log_binomial(periods, periods / 2) - periods as f64 * std::f64::consts::LN_2).exp()
    } else {
        0.0
    };
    2.0 * folded + central
}

/// `p(T, 2)` by the folded binomial sum (symmetric halves plus the central
/// term for even `T`), evaluated term by term in log-space.
pub fn price_two_stocks(periods: usize) -> Result<f64> {
    check_dims(periods, 2)?;
    Ok(two_stock_folded(&LogFactorialTable::new(periods), periods))
}

/// `p(T, 2)` by the unfolded sum over `j = 0..=T`.
pub fn price_two_stocks_unfolded(periods: usize) -> Result<f64> {
    check_dims(periods, 2)?;
    let lf = LogFactorialTable::new(periods);
    Ok((0..=periods).map(|j| two_stock_log_term(&lf, periods, j).exp()).sum())
}

/// `ln Gamma(j/2)` for a positive integer `j`, using `Gamma(1/2) = sqrt(pi)`,
/// `Gamma(1) = 1` and `Gamma(x+1) = x Gamma(x)`.
fn log_gamma_half(j: usize) -> f64 {
    let (mut x, mut acc) = if j.is_multiple_of(2) { (1.0, 0.0) } else { (0.5, 0.5 * PI.ln()) };
    while 2.0 * x < j as f64 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// Shtarkov coefficients `a_j = sqrt(pi) C(m,j) / (Gamma(j/2) 2^{(j-1)/2})`, `j = 1..=m`.
pub fn shtarkov_coefficients(assets: usize) -> Vec<f64> {
    let lf = LogFactorialTable::new(assets);
    (1..=assets)
        .map(|j| {
            (0.5 * PI.ln() + lf.log_binomial(assets, j)
                - log_gamma_half(j)
                - 0.5 * (j as f64 - 1.0) * std::f64::consts::LN_2)
                .exp()
        })
        .collect()
}

fn shtarkov_with(coefficients: &[f64], periods: f64) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .map(|(i, a)| a * periods.powf(i as f64 / 2.0))
        .sum()
}

/// `sum_j a_j T^{(j-1)/2}`, an upper bound on `p(T, m)`.
pub fn shtarkov_bound(periods: usize, assets: usize) -> Result<f64> {
    check_dims(periods, assets)?;
    Ok(shtarkov_with(&shtarkov_coefficients(assets), periods as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonMethod {
    /// Try `T = 1, 2, ...` against the exact price.
    ExactScan,
    /// Fixed-point iteration on Shtarkov's bound, then integer refinement.
    ShtarkovFixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonResult {
    pub horizon: usize,
    /// `log(price) / T` at the returned horizon, in nats per period.
    pub achieved_rate: f64,
    pub method: HorizonMethod,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance {eps} must be positive")));
    }
    Ok(())
}

/// Smallest integer `T` with `log(bound(T))/T <= eps` under Shtarkov's bound.
fn shtarkov_horizon(eps: f64, assets: usize) -> Result<HorizonResult> {
    let coefficients = shtarkov_coefficients(assets);
    let rate = |t: f64| shtarkov_with(&coefficients, t).ln() / t;
    let g = |t: f64| (shtarkov_with(&coefficients, t).ln() / eps).max(1.0);

    let mut current = 1.0_f64;
    let mut iterations = 0_u64;
    loop {
        let next = g(current);
        iterations += 1;
        if (next - current).abs() < 0.5 {
            current = next;
            break;
        }
        if iterations >= FIXED_POINT_CAP || !next.is_finite() {
            return Err(Error::budget(
                "fixed-point iterations",
                FIXED_POINT_CAP,
                "increase the tolerance",
            ));
        }
        current = next;
    }

    let mut horizon = current.ceil().max(1.0) as usize;
    while horizon > 1 && rate((horizon - 1) as f64) <= eps {
        horizon -= 1;
    }
    while rate(horizon as f64) > eps {
        horizon += 1;
    }
    Ok(HorizonResult {
        horizon,
        achieved_rate: rate(horizon as f64),
        method: HorizonMethod::ShtarkovFixedPoint,
    })
}

fn exact_scan_limit(assets: usize) -> usize {
    if assets <= 2 {
        EXACT_SCAN_LIMIT_TWO_STOCKS
    } else {
        EXACT_SCAN_LIMIT_MULTI
    }
}

fn exact_horizon(eps: f64, assets: usize) -> Result<HorizonResult> {
    let limit = exact_scan_limit(assets);
    // Shtarkov's bound dominates p(T,m), so its horizon caps the exact one.
    if assets >= 2 {
        let cap = shtarkov_horizon(eps, assets)?.horizon;
        if cap > limit {
            return Err(Error::budget(
                format!("exact scan up to T={cap}"),
                limit as u64,
                "use the shtarkov method",
            ));
        }
    }
    let found = |horizon: usize, price: f64| HorizonResult {
        horizon,
        achieved_rate: price.ln() / horizon as f64,
        method: HorizonMethod::ExactScan,
    };
    if assets == 1 {
        return Ok(found(1, 1.0));
    }
    if assets == 2 {
        let lf = LogFactorialTable::new(limit);
        for t in 1..=limit {
            let p = two_stock_folded(&lf, t);
            if p.ln() / t as f64 <= eps {
                return Ok(found(t, p));
            }
        }
    } else {
        let mut rec = PriceRecurrence::new(assets);
        for t in 1..=limit {
            let p = rec.price(t, assets);
            if p.ln() / t as f64 <= eps {
                return Ok(found(t, p));
            }
        }
    }
    Err(Error::budget(
        "exact scan",
        limit as u64,
        "use the shtarkov method",
    ))
}

/// Smallest horizon `T` with `log(p(T,m))/T <= eps` (or the bound's analogue).
pub fn horizon_for_tolerance(eps: f64, assets: usize, method: HorizonMethod) -> Result<HorizonResult> {
    check_eps(eps)?;
    check_dims(1, assets)?;
    match method {
        HorizonMethod::ExactScan => exact_horizon(eps, assets),
        HorizonMethod::ShtarkovFixedPoint => {
            if assets == 1 {
                return Ok(HorizonResult {
                    horizon: 1,
                    achieved_rate: 0.0,
                    method,
                });
            }
            shtarkov_horizon(eps, assets)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YearsNeeded {
    pub years: f64,
    pub frequency: u32,
    pub horizon: HorizonResult,
}

/// `(1/f) T_{eps/f}`: years needed when rebalancing `f` times per year.
/// Uses the exact scan when it fits the budget and Shtarkov's method otherwise.
pub fn years_needed(eps: f64, assets: usize, frequency: u32) -> Result<YearsNeeded> {
    check_eps(eps)?;
    if frequency == 0 {
        return Err(Error::InvalidArgument("frequency must be at least 1".into()));
    }
    let per_period = eps / f64::from(frequency);
    let horizon = match horizon_for_tolerance(per_period, assets, HorizonMethod::ExactScan) {
        Err(Error::BudgetExceeded { .. }) => {
            horizon_for_tolerance(per_period, assets, HorizonMethod::ShtarkovFixedPoint)?
        }
        other => other?,
    };
    Ok(years_with(horizon, frequency))
}

/// `(1/f) T_{eps/f}` with an explicit method.
pub fn years_needed_with(eps: f64, assets: usize, frequency: u32, method: HorizonMethod) -> Result<YearsNeeded> {
    check_eps(eps)?;
    if frequency == 0 {
        return Err(Error::InvalidArgument("frequency must be at least 1".into()));
    }
    let horizon = horizon_for_tolerance(eps / f64::from(frequency), assets, method)?;
    Ok(years_with(horizon, frequency))
}

fn years_with(horizon: HorizonResult, frequency: u32) -> YearsNeeded {
    YearsNeeded {
        years: horizon.horizon as f64 / f64::from(frequency),
        frequency,
        horizon,
    }
}
