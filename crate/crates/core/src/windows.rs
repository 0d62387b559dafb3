//! Multi-scale window grid.
//!
//! Start dates step forward from `t10` by `dt1` calendar days, end dates step
//! backward from `t20` by `dt2`. Every pair whose length lies in
//! `[dt_min, dt_max]` (both ends inclusive) is a window.

use std::io::Write;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Calendar interval `[t1, t2]` with `t1 < t2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Window {
    pub t1: NaiveDate,
    pub t2: NaiveDate,
}

impl Window {
    pub fn new(t1: NaiveDate, t2: NaiveDate) -> Result<Self> {
        if t1 >= t2 {
            return Err(Error::Config(format!(
                "window start {t1} is not before end {t2}"
            )));
        }
        Ok(Self { t1, t2 })
    }

    /// Length in calendar days.
    pub fn length_days(&self) -> i64 {
        (self.t2 - self.t1).num_days()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridConfig {
    pub t10: NaiveDate,
    pub t20: NaiveDate,
    pub dt1: i64,
    pub dt2: i64,
    pub dt_min: i64,
    pub dt_max: i64,
}

/// Human-readable statement of the grid convention, recorded in run manifests.
pub const GRID_CONVENTION: &str = "t1 = t10 + i*dt1 (i >= 0), t2 = t20 - j*dt2 (j >= 0), \
     dt_min <= t2 - t1 <= dt_max inclusive, ordered by t1 then t2";

impl Default for GridConfig {
    /// 1950-01-03 .. 2009-06-03, 50-day steps, 110..1500 day windows.
    fn default() -> Self {
        Self {
            t10: NaiveDate::from_ymd_opt(1950, 1, 3).unwrap(),
            t20: NaiveDate::from_ymd_opt(2009, 6, 3).unwrap(),
            dt1: 50,
            dt2: 50,
            dt_min: 110,
            dt_max: 1500,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt1 <= 0 || self.dt2 <= 0 {
            return Err(Error::Config(format!(
                "grid steps must be positive (dt1={}, dt2={})",
                self.dt1, self.dt2
            )));
        }
        if self.dt_min <= 0 || self.dt_min >= self.dt_max {
            return Err(Error::Config(format!(
                "need 0 < dt_min < dt_max (dt_min={}, dt_max={})",
                self.dt_min, self.dt_max
            )));
        }
        if self.t10 >= self.t20 {
            return Err(Error::Config(format!(
                "t10 {} must precede t20 {}",
                self.t10, self.t20
            )));
        }
        Ok(())
    }
}

/// Every grid window, ordered by ascending `t1` then ascending `t2`.
///
/// A span shorter than `dt_min` yields no windows.
pub fn generate_windows(config: &GridConfig) -> Result<Vec<Window>> {
    config.validate()?;
    let span = (config.t20 - config.t10).num_days();
    let mut out = Vec::new();
    // start offset a = i*dt1, end offset b = j*dt2 back from t20; length = span - a - b
    let mut a = 0;
    while span - a >= config.dt_min {
        // need dt_min <= span - a - b <= dt_max
        let b_max = span - a - config.dt_min;
        let b_min = (span - a - config.dt_max).max(0);
        let j_lo = (b_min + config.dt2 - 1) / config.dt2;
        let j_hi = b_max / config.dt2;
        let t1 = config.t10 + Duration::days(a);
        // descending j gives ascending t2
        for j in (j_lo..=j_hi).rev() {
            out.push(Window {
                t1,
                t2: config.t20 - Duration::days(j * config.dt2),
            });
        }
        a += config.dt1;
    }
    Ok(out)
}

/// Writes windows as `t1,t2` CSV.
pub fn write_windows_csv(windows: &[Window], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for w in windows {
        wtr.serialize(w)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}
