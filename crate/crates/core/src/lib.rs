//! Superhedging of lookback payoffs by multilinear derivatives, and the
//! horizon-optimized universal portfolio that results.
//!
//! * [`market`]: return matrices, portfolios, trading strategies and wealth.
//! * [`benchmarks`]: hindsight payoffs, including the best constant-rebalanced
//!   portfolio (Cover's Derivative).
//! * [`multilinear`]: exact replication and minimum-cost superhedges.
//! * [`pricing`]: the superhedging price `p(T, m)`, Shtarkov's bound and
//!   horizon selection.
//! * [`game`]: the trader-versus-nature game.
//! * [`backtest`], [`io`], [`figures`]: the command-line layer.

pub mod backtest;
pub mod benchmarks;
pub mod error;
pub mod figures;
pub mod game;
pub mod io;
pub mod market;
pub mod multilinear;
pub mod numeric;
pub mod pricing;

pub use backtest::{run_backtest, BacktestRecord, BacktestReport, BacktestSummary, Prior};
pub use benchmarks::{
    best_crp, cover_derivative, perfect_buy_and_hold, perfect_trader, BestCrpResult, CoverDerivative,
    PayoffEvaluator,
};
pub use error::{Error, Result};
pub use game::{
    co_utility, expected_payoff, lower_value, nature_distribution, payoff_ratio, upper_value_ratio,
    NatureDistribution, PathSet,
};
pub use market::{
    crp_wealth, returns_from_prices, wealth_of_strategy, ConstantRebalanced, History, PortfolioVector, PriceTable,
    ReturnMatrix, TradingStrategy,
};
pub use multilinear::{
    hedging_cost, majorant_coefficients, replicating_portfolio, MultilinearCoefficients, ReplicatingStrategy,
};
pub use pricing::{
    horizon_for_tolerance, price_direct, price_recurrence, price_two_stocks, shtarkov_bound, years_needed,
    HorizonMethod, HorizonResult, YearsNeeded,
};
