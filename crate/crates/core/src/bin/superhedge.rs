use std::fs::File;
use std::fmt::Write as _;
use std::io::{BufReader, BufWriter, ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use superhedge::backtest::{run_backtest, Prior};
use superhedge::error::{Error, Result};
use superhedge::figures::{write_figures, Figure};
use superhedge::io::{format_significant, read_prices};
use superhedge::market::returns_from_prices;
use superhedge::pricing::{
    horizon_for_tolerance, price_direct, price_recurrence, price_two_stocks, shtarkov_bound, years_needed,
    years_needed_with, HorizonMethod, HorizonResult,
};

const DIGITS: usize = 12;

#[derive(Parser)]
#[command(name = "superhedge", version, about = "Superhedging prices, horizons and universal-portfolio backtests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the superhedging price p(T, m) of the best-CRP payoff, or its bound.
    Price {
        periods: usize,
        assets: usize,
        #[arg(long, value_enum, default_value_t = PriceMethod::Recurrence)]
        method: PriceMethod,
    },
    /// Smallest horizon whose worst-case per-period regret is at most EPS.
    Horizon {
        eps: f64,
        assets: usize,
        /// Defaults to the exact scan, falling back to Shtarkov's method
        /// when the scan is over budget and --freq is given.
        #[arg(long, value_enum)]
        method: Option<CliHorizonMethod>,
        /// Rebalancing periods per year; EPS is then a per-year tolerance.
        #[arg(long)]
        freq: Option<u32>,
    },
    /// Run a universal portfolio over a price CSV.
    Backtest {
        prices: PathBuf,
        #[arg(long, value_enum, default_value_t = CliPrior::Co)]
        prior: CliPrior,
        #[arg(long)]
        out: PathBuf,
        /// Also write the JSON summary to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write the data tables behind the figures as CSV files.
    Figures {
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PriceMethod {
    Direct,
    Recurrence,
    TwoStock,
    Shtarkov,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliHorizonMethod {
    Exact,
    Shtarkov,
}

impl From<CliHorizonMethod> for HorizonMethod {
    fn from(m: CliHorizonMethod) -> Self {
        match m {
            CliHorizonMethod::Exact => HorizonMethod::ExactScan,
            CliHorizonMethod::Shtarkov => HorizonMethod::ShtarkovFixedPoint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliPrior {
    Co,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Regret,
    Shtarkov,
    Years,
    All,
}

fn num(v: f64) -> String {
    format_significant(v, DIGITS)
}

fn price(periods: usize, assets: usize, method: PriceMethod) -> Result<String> {
    let value = match method {
        PriceMethod::Direct => price_direct(periods, assets)?,
        PriceMethod::Recurrence => price_recurrence(periods, assets)?,
        PriceMethod::TwoStock => {
            if assets != 2 {
                return Err(Error::InvalidArgument(format!(
                    "two-stock method needs m = 2 (got {assets}); use --method recurrence"
                )));
            }
            price_two_stocks(periods)?
        }
        PriceMethod::Shtarkov => shtarkov_bound(periods, assets)?,
    };
    let rate = value.ln() / periods as f64;
    let label = if matches!(method, PriceMethod::Shtarkov) { "bound" } else { "price" };
    let mut text = format!("{label}: {}\n", num(value));
    let _ = writeln!(text, "log(p)/T: {} nats per period ({}%)", num(rate), num(100.0 * rate));
    Ok(text)
}

fn describe_horizon(text: &mut String, h: &HorizonResult) {
    let method = match h.method {
        HorizonMethod::ExactScan => "exact",
        HorizonMethod::ShtarkovFixedPoint => "shtarkov",
    };
    let _ = writeln!(text, "horizon: {}", h.horizon);
    let _ = writeln!(text, "achieved_rate: {} nats per period", num(h.achieved_rate));
    let _ = writeln!(text, "method: {method}");
}

fn horizon(eps: f64, assets: usize, method: Option<CliHorizonMethod>, freq: Option<u32>) -> Result<String> {
    let mut text = String::new();
    match freq {
        None => {
            let m = method.map_or(HorizonMethod::ExactScan, Into::into);
            describe_horizon(&mut text, &horizon_for_tolerance(eps, assets, m)?);
        }
        Some(f) => {
            let years = match method {
                None => years_needed(eps, assets, f)?,
                Some(m) => years_needed_with(eps, assets, f, m.into())?,
            };
            describe_horizon(&mut text, &years.horizon);
            let _ = writeln!(text, "frequency: {f}");
            let _ = writeln!(text, "years: {}", num(years.years));
        }
    }
    Ok(text)
}

fn backtest(prices: PathBuf, prior: CliPrior, out: PathBuf, summary: Option<PathBuf>) -> Result<String> {
    let input = File::open(&prices).map_err(|e| Error::Io(format!("{}: {e}", prices.display())))?;
    let file = read_prices(BufReader::new(input))?;
    let x = returns_from_prices(&file.table)?;
    let prior = match prior {
        CliPrior::Co => Prior::CoverOrdentlich,
        CliPrior::Uniform => Prior::Uniform,
    };
    let report = run_backtest(&x, prior)?;
    let output = File::create(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    report.write_csv(BufWriter::new(output))?;
    let json = report.summary_json();
    if let Some(path) = summary {
        let mut f = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        writeln!(f, "{json}")?;
    }
    Ok(json + "\n")
}

fn figures(which: Which, out: PathBuf) -> Result<String> {
    let list: &[Figure] = match which {
        Which::Regret => &[Figure::Regret],
        Which::Shtarkov => &[Figure::Shtarkov],
        Which::Years => &[Figure::Years],
        Which::All => &Figure::ALL,
    };
    let mut text = String::new();
    for path in write_figures(list, &out)? {
        let _ = writeln!(text, "{}", path.display());
    }
    Ok(text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Price { periods, assets, method } => price(periods, assets, method),
        Command::Horizon { eps, assets, method, freq } => horizon(eps, assets, method, freq),
        Command::Backtest {
            prices,
            prior,
            out,
            summary,
        } => backtest(prices, prior, out, summary),
        Command::Figures { which, out } => figures(which, out),
    };
    match result {
        Ok(text) => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != ErrorKind::BrokenPipe => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
            _ => ExitCode::SUCCESS,
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
