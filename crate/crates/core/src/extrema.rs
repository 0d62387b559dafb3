//! Rebounds, peaks and crashes.
//!
//! A rebound is a trading day whose price is the minimum of the `±radius`
//! trading days around it; peaks use the maximum. Only days with full
//! two-sided coverage are eligible, and every tying day is reported.

use std::collections::VecDeque;
use std::io::Write;

use chrono::Duration;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{PriceSeries, TradingDay};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Rebound,
    Peak,
    Crash,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionRule {
    /// Extremum over `±radius` trading days.
    Extremum { radius: usize },
    /// Fall of more than `drop` within `horizon` calendar days of a local high.
    Crash { drop: f64, horizon: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSet {
    pub kind: EventKind,
    pub days: Vec<TradingDay>,
    pub rule: DetectionRule,
}

impl EventSet {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Re-evaluates the defining predicate on every reported day.
    pub fn verify(&self, series: &PriceSeries) -> bool {
        let sorted = self.days.windows(2).all(|w| w[0].index < w[1].index);
        sorted
            && self.days.iter().all(|d| {
                d.index < series.len()
                    && series.days()[d.index] == *d
                    && match (self.kind, self.rule) {
                        (EventKind::Rebound, DetectionRule::Extremum { radius }) => {
                            is_extremum(series.prices(), d.index, radius, |a, b| a <= b)
                        }
                        (EventKind::Peak, DetectionRule::Extremum { radius }) => {
                            is_extremum(series.prices(), d.index, radius, |a, b| a >= b)
                        }
                        (EventKind::Crash, DetectionRule::Crash { drop, horizon }) => {
                            is_crash(series, d.index, drop, horizon)
                        }
                        _ => false,
                    }
            })
    }

    /// Writes `kind,date` rows.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["kind", "date"])?;
        let kind = match self.kind {
            EventKind::Rebound => "rebound",
            EventKind::Peak => "peak",
            EventKind::Crash => "crash",
        };
        for d in &self.days {
            wtr.write_record([kind, &d.date.format("%Y-%m-%d").to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

fn is_extremum(prices: &[f64], d: usize, radius: usize, keeps: impl Fn(f64, f64) -> bool) -> bool {
    d >= radius
        && d + radius < prices.len()
        && prices[d - radius..=d + radius]
            .iter()
            .all(|&x| keeps(prices[d], x))
}

/// Days equal to the extremum selected by `better` over their `±radius` window.
fn sliding_extrema(
    series: &PriceSeries,
    radius: usize,
    better: impl Fn(f64, f64) -> bool,
) -> Vec<TradingDay> {
    let p = series.prices();
    let n = p.len();
    let width = 2 * radius + 1;
    if n < width {
        log::warn!("series of {n} days is too short for radius {radius}; no extrema");
        return Vec::new();
    }
    let mut out = Vec::new();
    // front holds the index of the window extremum
    let mut dq: VecDeque<usize> = VecDeque::new();
    for i in 0..n {
        while let Some(&back) = dq.back() {
            if better(p[i], p[back]) {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(i);
        if i + 1 >= width {
            let start = i + 1 - width;
            while dq.front().is_some_and(|&f| f < start) {
                dq.pop_front();
            }
            let center = start + radius;
            if p[center] == p[*dq.front().expect("window non-empty")] {
                out.push(series.days()[center]);
            }
        }
    }
    out
}

/// Rebound days: price equals the minimum over `[d - radius, d + radius]`.
pub fn detect_rebounds(series: &PriceSeries, radius: usize) -> EventSet {
    EventSet {
        kind: EventKind::Rebound,
        days: sliding_extrema(series, radius, |a, b| a < b),
        rule: DetectionRule::Extremum { radius },
    }
}

/// Peak days: price equals the maximum over `[d - radius, d + radius]`.
pub fn detect_peaks(series: &PriceSeries, radius: usize) -> EventSet {
    EventSet {
        kind: EventKind::Peak,
        days: sliding_extrema(series, radius, |a, b| a > b),
        rule: DetectionRule::Extremum { radius },
    }
}

fn is_crash(series: &PriceSeries, d: usize, drop: f64, horizon: i64) -> bool {
    let days = series.days();
    let p = series.prices();
    let date = days[d].date;
    let before_lo = series.lower_bound(date - Duration::days(horizon));
    let after_hi = series.upper_bound(date + Duration::days(horizon));
    if after_hi <= d + 1 {
        return false;
    }
    let high_before = p[before_lo..d].iter().all(|&x| p[d] >= x);
    let after = &p[d + 1..after_hi];
    let high_after = after.iter().all(|&x| p[d] > x);
    let low = after.iter().copied().fold(f64::INFINITY, f64::min);
    high_before && high_after && low < (1.0 - drop) * p[d]
}

/// Local highs followed by a fall of more than `drop` within `horizon`
/// calendar days.
///
/// A local high is at least every price in the preceding `horizon` days and
/// strictly above every price in the following `horizon` days, so a plateau
/// is reported once, at its last day.
pub fn detect_crashes(series: &PriceSeries, drop: f64, horizon: i64) -> EventSet {
    let days = (0..series.len())
        .filter(|&d| is_crash(series, d, drop, horizon))
        .map(|d| series.days()[d])
        .collect();
    EventSet {
        kind: EventKind::Crash,
        days,
        rule: DetectionRule::Crash { drop, horizon },
    }
}
