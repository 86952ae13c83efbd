//! Price CSV ingestion and emission.
//!
//! Format: a header `date,asset_1,...,asset_m[,div_1,...,div_m]`, then one row
//! per session close. The first row holds the initial prices `S_0`; dividend
//! columns are optional and default to zero.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::market::PriceTable;

/// Digits used when writing prices.
pub const PRICE_DIGITS: usize = 15;

/// Formats `v` with `digits` significant digits, trimming trailing zeros.
/// Plain decimal notation is used for exponents in `[-5, digits)`.
pub fn format_significant(v: f64, digits: usize) -> String {
    assert!(digits > 0);
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exponent) {
        let decimals = (digits as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exponent}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A parsed price file: the table plus the date labels, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceFile {
    pub dates: Vec<String>,
    pub table: PriceTable,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn record_line(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map_or(fallback, |p| p.line() as usize)
}

/// Reads a price CSV.
pub fn read_prices<R: Read>(input: R) -> Result<PriceFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let header = reader.headers().map_err(|e| parse_error(1, e.to_string()))?.clone();
    if header.len() < 2 {
        return Err(parse_error(1, "header needs a date column and at least one asset"));
    }
    let names: Vec<&str> = header.iter().skip(1).collect();
    let dividend_start = names.iter().position(|n| n.starts_with("div"));
    let (assets, with_dividends) = match dividend_start {
        None => (names.len(), false),
        Some(0) => return Err(parse_error(1, "no asset columns before dividend columns")),
        Some(start) => {
            if names.len() != 2 * start || !names[start..].iter().all(|n| n.starts_with("div")) {
                return Err(parse_error(1, format!("expected {start} dividend columns after {start} assets")));
            }
            (start, true)
        }
    };
    let width = 1 + assets * if with_dividends { 2 } else { 1 };

    let mut dates = Vec::new();
    let mut prices = Vec::new();
    let mut dividends = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(i + 2, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = record_line(&record, i + 2);
        if record.len() != width {
            return Err(parse_error(line, format!("expected {width} fields, found {}", record.len())));
        }
        let mut values = Vec::with_capacity(width - 1);
        for (j, field) in record.iter().enumerate().skip(1) {
            let value: f64 = field
                .parse()
                .map_err(|_| parse_error(line, format!("field {} is not a number: {field:?}", j + 1)))?;
            if !value.is_finite() {
                return Err(parse_error(line, format!("field {} is not finite", j + 1)));
            }
            values.push(value);
        }
        let (row_prices, row_dividends) = values.split_at(assets);
        if let Some(k) = row_prices.iter().position(|&p| p <= 0.0) {
            return Err(parse_error(line, format!("nonpositive price {} for asset {}", row_prices[k], k + 1)));
        }
        if let Some(k) = row_dividends.iter().position(|&d| d < 0.0) {
            return Err(parse_error(line, format!("negative dividend for asset {}", k + 1)));
        }
        dates.push(record[0].to_string());
        prices.push(row_prices.to_vec());
        dividends.push(row_dividends.to_vec());
    }
    if prices.len() < 2 {
        return Err(parse_error(1, "need an initial row and at least one more"));
    }
    let initial = prices.remove(0);
    dividends.remove(0);
    let table = PriceTable::new(initial, prices, with_dividends.then_some(dividends));
    Ok(PriceFile { dates, table })
}

/// Writes a price CSV with [`PRICE_DIGITS`] significant digits. Dates default
/// to row numbers starting at 0.
pub fn write_prices<W: Write>(output: W, table: &PriceTable, dates: Option<&[String]>) -> Result<()> {
    let m = table.assets();
    let rows = table.prices.len() + 1;
    if let Some(d) = dates {
        if d.len() != rows {
            return Err(Error::InvalidArgument(format!("{} dates for {rows} rows", d.len())));
        }
    }
    let mut writer = csv::Writer::from_writer(output);
    let mut header = vec!["date".to_string()];
    header.extend((1..=m).map(|j| format!("asset_{j}")));
    if table.dividends.is_some() {
        header.extend((1..=m).map(|j| format!("div_{j}")));
    }
    writer.write_record(&header).map_err(csv_io)?;
    for r in 0..rows {
        let mut record = vec![dates.map_or_else(|| r.to_string(), |d| d[r].clone())];
        let prices = if r == 0 { &table.initial_prices } else { &table.prices[r - 1] };
        record.extend(prices.iter().map(|&p| format_significant(p, PRICE_DIGITS)));
        if let Some(div) = &table.dividends {
            if r == 0 {
                record.extend(std::iter::repeat_n("0".to_string(), m));
            } else {
                record.extend(div[r - 1].iter().map(|&d| format_significant(d, PRICE_DIGITS)));
            }
        }
        writer.write_record(&record).map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
