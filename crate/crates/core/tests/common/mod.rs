#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use superhedge::market::{History, PortfolioVector, ReturnMatrix, TradingStrategy};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the simplex (normalized exponentials).
pub fn simplex_point(rng: &mut impl Rng, assets: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..assets).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Gross returns drawn uniformly from `[low, high]`.
pub fn random_returns(rng: &mut impl Rng, periods: usize, assets: usize, low: f64, high: f64) -> ReturnMatrix {
    let data = (0..periods * assets).map(|_| rng.gen_range(low..=high)).collect();
    ReturnMatrix::from_flat(data, assets).unwrap()
}

/// Mix of mild and volatile paths, with occasional zero returns.
pub fn varied_returns(rng: &mut impl Rng, periods: usize, assets: usize) -> ReturnMatrix {
    let volatile = rng.gen_bool(0.5);
    let mut data: Vec<f64> = (0..periods * assets)
        .map(|_| if volatile { rng.gen_range(0.1..=3.0) } else { rng.gen_range(0.8..=1.25) })
        .collect();
    if rng.gen_bool(0.2) {
        let t = rng.gen_range(0..periods);
        let j = rng.gen_range(0..assets);
        if (0..assets).any(|k| k != j && data[t * assets + k] > 0.0) {
            data[t * assets + j] = 0.0;
        }
    }
    ReturnMatrix::from_flat(data, assets).unwrap()
}

pub fn random_prices(rng: &mut impl Rng, periods: usize, assets: usize) -> superhedge::PriceTable {
    let initial: Vec<f64> = (0..assets).map(|_| rng.gen_range(5.0..=50.0)).collect();
    let mut current = initial.clone();
    let mut prices = Vec::with_capacity(periods);
    for _ in 0..periods {
        for p in current.iter_mut() {
            *p *= rng.gen_range(0.7..=1.4);
        }
        prices.push(current.clone());
    }
    superhedge::PriceTable::new(initial, prices, None)
}

/// Per-period portfolios fixed in advance, optionally tilted by the history.
#[derive(Debug, Clone)]
pub struct RandomStrategy {
    assets: usize,
    schedule: Vec<Vec<f64>>,
    tilt: Option<Vec<f64>>,
}

impl RandomStrategy {
    pub fn new(rng: &mut impl Rng, periods: usize, assets: usize) -> Self {
        let schedule = (0..periods.max(1)).map(|_| simplex_point(rng, assets)).collect();
        let tilt = rng
            .gen_bool(0.3)
            .then(|| (0..assets).map(|_| rng.gen_range(-2.0..=2.0)).collect());
        Self { assets, schedule, tilt }
    }

    pub fn memoryless(rng: &mut impl Rng, periods: usize, assets: usize) -> Self {
        let mut s = Self::new(rng, periods, assets);
        s.tilt = None;
        s
    }
}

impl TradingStrategy for RandomStrategy {
    fn assets(&self) -> usize {
        self.assets
    }

    fn portfolio_at(&self, history: History<'_>) -> PortfolioVector {
        let t = history.len().min(self.schedule.len() - 1);
        let base = &self.schedule[t];
        let weights = match &self.tilt {
            None => base.clone(),
            Some(tilt) => {
                let signal: f64 = history.as_flat().iter().sum::<f64>().sin();
                base.iter()
                    .zip(tilt)
                    .map(|(b, k)| b * (k * signal).exp())
                    .collect()
            }
        };
        PortfolioVector::from_unnormalized(weights).unwrap()
    }
}

pub fn assert_close(a: f64, b: f64, rel: f64, what: &str) {
    let scale = a.abs().max(b.abs()).max(1e-300);
    assert!((a - b).abs() <= rel * scale, "{what}: {a} vs {b}");
}
