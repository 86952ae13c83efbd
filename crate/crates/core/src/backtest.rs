//! Running a symmetric-prior universal portfolio over a return history and
//! comparing it with the best constant-rebalanced portfolio in hindsight.
//!
//! Row `t` reports the wealth of the horizon-`t` strategy for the chosen
//! prior, `W_t = sum_{|n| = t} alpha_t(n) sigma(n; x^t)`, against
//! `D(x^t)`. Its regret is bounded by `log p(t, m)` for the
//! Cover-Ordentlich prior and `log C(t+m-1, m-1)` for the uniform prior.
//! When the marginal table fits the budget, `w_traded` also reports the
//! wealth of the single self-financing horizon-`T` strategy.

use serde::Serialize;

use crate::benchmarks::{best_crp_from, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::market::ReturnMatrix;
use crate::multilinear::symmetric::{prior_cover_ordentlich, prior_cover_uniform, MarginalTable, SigmaTable};
use crate::multilinear::SYMMETRIC_MAX_ASSETS;
use crate::numeric::LogAccumulator;
use crate::pricing::{log_vertex_value, LogFactorialTable, PriceRecurrence};

/// Tolerance for the row-wise regret bound check.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    /// `alpha(n) = prod_k (n_k/T)^{n_k} / p(T, m)`.
    CoverOrdentlich,
    /// Equal weight per type class.
    Uniform,
}

impl Prior {
    pub fn name(self) -> &'static str {
        match self {
            Prior::CoverOrdentlich => "co",
            Prior::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestRecord {
    pub t: usize,
    pub w_universal: f64,
    pub d_hindsight: f64,
    pub regret_nats: f64,
    pub bound_nats: f64,
    /// `ln(W_universal) / t`.
    pub rate_universal: f64,
    /// `ln(D_hindsight) / t`.
    pub rate_hindsight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_traded: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestSummary {
    pub prior: &'static str,
    pub periods: usize,
    pub assets: usize,
    pub final_wealth_universal: f64,
    pub final_wealth_hindsight: f64,
    pub final_regret_nats: f64,
    pub bound_nats: f64,
    pub max_excess_over_bound: f64,
    pub bound_holds: bool,
    pub growth_universal: f64,
    pub growth_hindsight: f64,
    pub best_crp: Vec<f64>,
    pub final_wealth_traded: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub records: Vec<BacktestRecord>,
    pub summary: BacktestSummary,
}

impl BacktestReport {
    /// Writes the per-period records as CSV.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let traded = self.summary.final_wealth_traded.is_some();
        let mut header = vec![
            "t",
            "w_universal",
            "d_hindsight",
            "regret_nats",
            "bound_nats",
            "rate_universal",
            "rate_hindsight",
        ];
        if traded {
            header.push("w_traded");
        }
        writer.write_record(&header).map_err(csv_error)?;
        for r in &self.records {
            let mut row = vec![
                r.t.to_string(),
                crate::io::format_significant(r.w_universal, 15),
                crate::io::format_significant(r.d_hindsight, 15),
                crate::io::format_significant(r.regret_nats, 15),
                crate::io::format_significant(r.bound_nats, 15),
                crate::io::format_significant(r.rate_universal, 15),
                crate::io::format_significant(r.rate_hindsight, 15),
            ];
            if traded {
                row.push(r.w_traded.map_or_else(String::new, |w| crate::io::format_significant(w, 15)));
            }
            writer.write_record(&row).map_err(csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Per-stage log-normalizer and log type weights for the horizon-`t` prior.
struct PriorWeights {
    prior: Prior,
    assets: usize,
    recurrence: PriceRecurrence,
    factorials: LogFactorialTable,
}

impl PriorWeights {
    fn new(prior: Prior, assets: usize, periods: usize) -> Self {
        let mut recurrence = PriceRecurrence::new(assets);
        recurrence.extend_to(periods);
        Self {
            prior,
            assets,
            recurrence,
            factorials: LogFactorialTable::new(periods + assets),
        }
    }

    /// The deposit at horizon `t`, in log form; this is the regret bound.
    fn log_scale(&mut self, t: usize) -> f64 {
        match self.prior {
            Prior::CoverOrdentlich => self.recurrence.price(t, self.assets).ln(),
            Prior::Uniform => self.factorials.log_binomial(t + self.assets - 1, self.assets - 1),
        }
    }

    /// `ln(alpha_t(n) * scale)`.
    fn log_unscaled_weight(&self, counts: &[usize]) -> f64 {
        match self.prior {
            Prior::CoverOrdentlich => log_vertex_value(counts),
            Prior::Uniform => -self.factorials.log_multinomial(counts),
        }
    }
}

/// Runs the backtest on `x` with the given prior.
pub fn run_backtest(x: &ReturnMatrix, prior: Prior) -> Result<BacktestReport> {
    let (periods, m) = (x.periods(), x.assets());
    if periods == 0 {
        return Err(Error::InvalidReturns("backtest needs at least one period".into()));
    }
    if m > SYMMETRIC_MAX_ASSETS {
        return Err(Error::budget(
            format!("{m} assets"),
            SYMMETRIC_MAX_ASSETS as u64,
            "the type-class engine supports at most 6 assets",
        ));
    }
    let traded = match prior {
        Prior::CoverOrdentlich => prior_cover_ordentlich(periods, m),
        Prior::Uniform => prior_cover_uniform(periods, m),
    }
    .and_then(|alpha| MarginalTable::new(&alpha));
    let traded = match traded {
        Ok(table) => Some(table),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };

    let mut weights = PriorWeights::new(prior, m, periods);
    let mut sigma = SigmaTable::new(m)?;
    let mut records = Vec::with_capacity(periods);
    let mut warm: Option<Vec<f64>> = None;
    let mut best = None;
    let mut max_excess = f64::NEG_INFINITY;
    for (i, row) in x.rows().enumerate() {
        let t = i + 1;
        sigma = sigma.advance(row)?;
        let log_scale = weights.log_scale(t);
        let mut acc = LogAccumulator::new();
        for (counts, ls) in sigma.indexer().iter().zip(sigma.log_values()) {
            acc.add(weights.log_unscaled_weight(&counts) + ls);
        }
        let log_w = acc.value() - log_scale;

        let hindsight = best_crp_from(&x.truncated(t), DEFAULT_TOLERANCE, warm.as_deref());
        let log_d = hindsight.value.ln();
        warm = Some(hindsight.maximizer.clone());

        let regret = log_d - log_w;
        max_excess = max_excess.max(regret - log_scale);
        records.push(BacktestRecord {
            t,
            w_universal: log_w.exp(),
            d_hindsight: hindsight.value,
            regret_nats: regret,
            bound_nats: log_scale,
            rate_universal: log_w / t as f64,
            rate_hindsight: log_d / t as f64,
            w_traded: traded.as_ref().map(|table| table.log_wealth(&sigma).exp()),
        });
        best = Some(hindsight);
    }

    let last = records.last().expect("at least one period");
    let best = best.expect("at least one period");
    let summary = BacktestSummary {
        prior: prior.name(),
        periods,
        assets: m,
        final_wealth_universal: last.w_universal,
        final_wealth_hindsight: last.d_hindsight,
        final_regret_nats: last.regret_nats,
        bound_nats: last.bound_nats,
        max_excess_over_bound: max_excess,
        bound_holds: max_excess <= BOUND_TOLERANCE,
        growth_universal: last.rate_universal,
        growth_hindsight: last.rate_hindsight,
        best_crp: best.maximizer,
        final_wealth_traded: last.w_traded,
    };
    Ok(BacktestReport { records, summary })
}
