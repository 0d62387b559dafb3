//! Daily adjusted-close price series.
//!
//! Dates carry no time of day. Model time is measured in calendar days as
//! real numbers counted from 1970-01-01 (see [`day_number`]), so a critical
//! time can sit a fraction of a day past the last observation.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::windows::Window;

const EPOCH: NaiveDate = match NaiveDate::from_ymd_opt(1970, 1, 1) {
    Some(d) => d,
    None => unreachable!(),
};

/// Calendar days since 1970-01-01.
pub fn day_number(date: NaiveDate) -> f64 {
    (date - EPOCH).num_days() as f64
}

/// Inverse of [`day_number`], truncating any fractional day.
pub fn date_from_day_number(days: f64) -> NaiveDate {
    EPOCH + Duration::days(days.floor() as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TradingDay {
    pub date: NaiveDate,
    pub index: usize,
}

/// Dated sequence of strictly positive adjusted closing prices.
///
/// At least two observations, dates strictly increasing, indices dense.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    days: Vec<TradingDay>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series from already-ordered observations.
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::InvalidSeries(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if dates.len() < 2 {
            return Err(Error::InvalidSeries(format!(
                "need at least 2 observations, got {}",
                dates.len()
            )));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidSeries(format!("non-positive price {p}")));
        }
        for pair in dates.windows(2) {
            if pair[1] == pair[0] {
                return Err(Error::DuplicateDate(pair[0]));
            }
            if pair[1] < pair[0] {
                return Err(Error::InvalidSeries(format!(
                    "dates not increasing at {}",
                    pair[1]
                )));
            }
        }
        let days = dates
            .into_iter()
            .enumerate()
            .map(|(index, date)| TradingDay { date, index })
            .collect();
        Ok(Self { days, prices })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn days(&self) -> &[TradingDay] {
        &self.days
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.days.iter().map(|d| d.date)
    }

    pub fn first_date(&self) -> NaiveDate {
        self.days[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.days[self.days.len() - 1].date
    }

    /// Model time of every observation, see [`day_number`].
    pub fn times(&self) -> Vec<f64> {
        self.days.iter().map(|d| day_number(d.date)).collect()
    }

    /// Natural log of every price.
    pub fn log_prices(&self) -> Vec<f64> {
        self.prices.iter().map(|p| p.ln()).collect()
    }

    /// Index of the first trading day on or after `date`.
    pub fn lower_bound(&self, date: NaiveDate) -> usize {
        self.days.partition_point(|d| d.date < date)
    }

    /// Index one past the last trading day on or before `date`.
    pub fn upper_bound(&self, date: NaiveDate) -> usize {
        self.days.partition_point(|d| d.date <= date)
    }

    /// All trading days with `t1 <= date <= t2`, re-indexed from zero.
    pub fn slice(&self, window: &Window) -> Result<PriceSeries> {
        let lo = self.lower_bound(window.t1);
        let hi = self.upper_bound(window.t2);
        let n = hi.saturating_sub(lo);
        if n == 0 {
            return Err(Error::Empty("window selects no trading days"));
        }
        if n < 2 {
            return Err(Error::TooFewPoints {
                t1: window.t1,
                t2: window.t2,
                n,
                min: 2,
            });
        }
        self.range(lo, hi)
    }

    /// Sub-series over trading-day indices `lo..hi`, re-indexed from zero.
    pub fn range(&self, lo: usize, hi: usize) -> Result<PriceSeries> {
        let dates = self.days[lo..hi].iter().map(|d| d.date).collect();
        PriceSeries::new(dates, self.prices[lo..hi].to_vec())
    }

    /// Same dates with every price passed through `f`.
    pub fn map_prices(&self, f: impl Fn(f64) -> f64) -> Result<PriceSeries> {
        PriceSeries::new(
            self.dates().collect(),
            self.prices.iter().map(|&p| f(p)).collect(),
        )
    }
}

/// Natural log of every price in `series`.
pub fn log_prices(series: &PriceSeries) -> Vec<f64> {
    series.log_prices()
}

/// Outcome of a CSV load besides the series itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows_read: usize,
    /// Rows dropped because the price was missing, unparseable or not positive.
    pub rows_rejected: usize,
}

/// Loads a price series from a headed CSV file.
pub fn load_csv(
    path: impl AsRef<Path>,
    date_column: &str,
    price_column: &str,
) -> Result<(PriceSeries, LoadReport)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, date_column, price_column)
}

/// As [`load_csv`], from any reader.
pub fn read_csv(
    reader: impl Read,
    date_column: &str,
    price_column: &str,
) -> Result<(PriceSeries, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_idx = find(date_column)?;
    let price_idx = find(price_column)?;

    let mut report = LoadReport::default();
    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        report.rows_read += 1;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw_date = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| Error::BadDate {
            line,
            value: raw_date.to_string(),
        })?;
        let price = record
            .get(price_idx)
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|p| p.is_finite() && *p > 0.0);
        match price {
            Some(p) => rows.push((date, p)),
            None => report.rows_rejected += 1,
        }
    }
    if report.rows_rejected > 0 {
        log::warn!(
            "rejected {} rows with missing or non-positive price",
            report.rows_rejected
        );
    }
    if rows.is_empty() {
        return Err(Error::NoValidRows);
    }
    rows.sort_by_key(|(d, _)| *d);
    let mut seen = HashSet::with_capacity(rows.len());
    for (d, _) in &rows {
        if !seen.insert(*d) {
            return Err(Error::DuplicateDate(*d));
        }
    }
    let (dates, prices) = rows.into_iter().unzip();
    Ok((PriceSeries::new(dates, prices)?, report))
}

/// Writes `series` as `date_column,price_column` CSV readable by [`read_csv`].
pub fn write_csv(
    series: &PriceSeries,
    writer: impl Write,
    date_column: &str,
    price_column: &str,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([date_column, price_column])?;
    for (day, price) in series.days().iter().zip(series.prices()) {
        wtr.write_record([day.date.format("%Y-%m-%d").to_string(), price.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
