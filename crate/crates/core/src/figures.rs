//! Data tables behind the regret, Shtarkov-accuracy and years-needed plots.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::format_significant;
use crate::pricing::{
    horizon_for_tolerance, shtarkov_coefficients, years_needed, HorizonMethod, PriceRecurrence,
};

pub const REGRET_ASSETS: std::ops::RangeInclusive<usize> = 2..=5;
pub const MAX_HORIZON: usize = 1000;
pub const YEARS_FREQUENCIES: [u32; 9] = [1, 2, 4, 12, 26, 52, 104, 252, 365];
pub const YEARS_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Regret,
    Shtarkov,
    Years,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Regret, Figure::Shtarkov, Figure::Years];

    pub fn file_name(self) -> &'static str {
        match self {
            Figure::Regret => "regret.csv",
            Figure::Shtarkov => "shtarkov.csv",
            Figure::Years => "years.csv",
        }
    }
}

/// `T = 1..=100`, then 20 log-spaced points per decade up to 1000.
pub fn horizon_grid() -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=100).collect();
    for i in 1..=20 {
        let t = (100.0 * 10f64.powf(f64::from(i) / 20.0)).round() as usize;
        if t > *grid.last().expect("nonempty") {
            grid.push(t.min(MAX_HORIZON));
        }
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretRow {
    pub periods: usize,
    pub assets: usize,
    pub price: f64,
    /// `ln p(T, m) / T`, nats per period.
    pub rate: f64,
}

pub fn regret_table() -> Vec<RegretRow> {
    let grid = horizon_grid();
    let max_m = *REGRET_ASSETS.end();
    let mut recurrence = PriceRecurrence::new(max_m);
    recurrence.extend_to(MAX_HORIZON);
    let mut rows = Vec::new();
    for m in REGRET_ASSETS {
        for &t in &grid {
            let price = recurrence.price(t, m);
            rows.push(RegretRow {
                periods: t,
                assets: m,
                price,
                rate: price.ln() / t as f64,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShtarkovRow {
    pub periods: usize,
    pub exact: f64,
    pub bound: f64,
    /// `bound / exact - 1`.
    pub relative_slack: f64,
}

/// Exact `p(T, 2)` against Shtarkov's bound over [`horizon_grid`].
pub fn shtarkov_table() -> Vec<ShtarkovRow> {
    let a = shtarkov_coefficients(2);
    let mut recurrence = PriceRecurrence::new(2);
    recurrence.extend_to(MAX_HORIZON);
    horizon_grid()
        .into_iter()
        .map(|t| {
            let exact = recurrence.price(t, 2);
            let bound = a[0] + a[1] * (t as f64).sqrt();
            ShtarkovRow {
                periods: t,
                exact,
                bound,
                relative_slack: bound / exact - 1.0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YearsRow {
    pub frequency: u32,
    /// Periods needed by the smallest-horizon search (Shtarkov when over budget).
    pub horizon: usize,
    pub years: f64,
    pub method: HorizonMethod,
    pub shtarkov_horizon: usize,
    pub shtarkov_years: f64,
}

/// Years needed for `eps = 0.01` and two assets at each rebalancing frequency.
pub fn years_table() -> Result<Vec<YearsRow>> {
    YEARS_FREQUENCIES
        .iter()
        .map(|&f| {
            let best = years_needed(YEARS_TOLERANCE, 2, f)?;
            let sh = horizon_for_tolerance(YEARS_TOLERANCE / f64::from(f), 2, HorizonMethod::ShtarkovFixedPoint)?;
            Ok(YearsRow {
                frequency: f,
                horizon: best.horizon.horizon,
                years: best.years,
                method: best.horizon.method,
                shtarkov_horizon: sh.horizon,
                shtarkov_years: sh.horizon as f64 / f64::from(f),
            })
        })
        .collect()
}

fn method_name(method: HorizonMethod) -> &'static str {
    match method {
        HorizonMethod::ExactScan => "exact_scan",
        HorizonMethod::ShtarkovFixedPoint => "shtarkov_fixed_point",
    }
}

fn num(v: f64) -> String {
    format_significant(v, 15)
}

fn render(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// CSV text for one figure.
pub fn render_figure(figure: Figure) -> Result<String> {
    Ok(match figure {
        Figure::Regret => render(
            &["periods", "assets", "price", "rate"],
            regret_table()
                .into_iter()
                .map(|r| vec![r.periods.to_string(), r.assets.to_string(), num(r.price), num(r.rate)]),
        ),
        Figure::Shtarkov => render(
            &["periods", "exact", "bound", "relative_slack"],
            shtarkov_table()
                .into_iter()
                .map(|r| vec![r.periods.to_string(), num(r.exact), num(r.bound), num(r.relative_slack)]),
        ),
        Figure::Years => render(
            &["frequency", "horizon", "years", "method", "shtarkov_horizon", "shtarkov_years"],
            years_table()?.into_iter().map(|r| {
                vec![
                    r.frequency.to_string(),
                    r.horizon.to_string(),
                    num(r.years),
                    method_name(r.method).to_string(),
                    r.shtarkov_horizon.to_string(),
                    num(r.shtarkov_years),
                ]
            }),
        ),
    })
}

/// Writes the requested figures into `dir`, creating it if needed, and
/// returns the paths written. Figures are computed on separate threads.
pub fn write_figures(figures: &[Figure], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let rendered: Vec<Result<String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = figures
            .iter()
            .map(|&f| scope.spawn(move || render_figure(f)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("figure thread")).collect()
    });
    let mut written = Vec::with_capacity(figures.len());
    for (&figure, text) in figures.iter().zip(rendered) {
        let path = dir.join(figure.file_name());
        fs::write(&path, text?).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
