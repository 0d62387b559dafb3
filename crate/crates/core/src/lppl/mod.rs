//! Power-law and LPPL models: evaluation, calibration, bubble sign and
//! critical-time bands.

mod fit;
mod linear;
mod model;
mod simplex;

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use fit::{fit_window, scan, FitResult, ModelKind, ScanReport, SearchConfig};
pub use linear::{solve_linear_params, LinearSolution, NonlinearParams};
pub use model::{eval_lppl, eval_power_law, LpplParams, PowerLawParams};

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;
use crate::timeseries::date_from_day_number;
use crate::windows::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BubbleSign {
    /// `B < 0`: accelerating rise toward a peak.
    PositiveBubble,
    /// `B > 0`: accelerating decline toward a rebound.
    NegativeBubble,
    Indeterminate,
}

/// Sign of the power-law amplitude with a dead band of half-width `epsilon`.
pub fn classify_bubble_sign(fit: &FitResult, epsilon: f64) -> BubbleSign {
    let b = fit.params.b;
    if b < -epsilon {
        BubbleSign::PositiveBubble
    } else if b > epsilon {
        BubbleSign::NegativeBubble
    } else {
        BubbleSign::Indeterminate
    }
}

/// Empirical quantile interval of critical times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcBand {
    pub lower_level: f64,
    pub upper_level: f64,
    /// Model days.
    pub lower: f64,
    pub upper: f64,
}

impl TcBand {
    pub fn lower_date(&self) -> NaiveDate {
        date_from_day_number(self.lower)
    }

    pub fn upper_date(&self) -> NaiveDate {
        date_from_day_number(self.upper)
    }
}

/// Quantile bands of `tc` over the converged fits, one per `(lower, upper)`
/// level pair, with linear interpolation between order statistics.
pub fn aggregate_tc_quantiles(fits: &[FitResult], levels: &[(f64, f64)]) -> Result<Vec<TcBand>> {
    let mut tcs: Vec<f64> = fits
        .iter()
        .filter(|f| f.converged)
        .map(|f| f.params.tc)
        .collect();
    if tcs.is_empty() {
        return Err(Error::Empty("no converged fits"));
    }
    tcs.sort_by(f64::total_cmp);
    levels
        .iter()
        .map(|&(lo, hi)| {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::Config(format!("bad quantile levels ({lo}, {hi})")));
            }
            Ok(TcBand {
                lower_level: lo,
                upper_level: hi,
                lower: quantile_sorted(&tcs, lo),
                upper: quantile_sorted(&tcs, hi),
            })
        })
        .collect()
}

/// Flat CSV row for a [`FitResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FitRecord {
    t1: NaiveDate,
    t2: NaiveDate,
    a: f64,
    b: f64,
    c: f64,
    m: f64,
    tc: f64,
    tc_date: NaiveDate,
    omega: f64,
    phi: f64,
    rmse: f64,
    n_points: usize,
    converged: bool,
    n_restarts_used: usize,
}

impl From<&FitResult> for FitRecord {
    fn from(f: &FitResult) -> Self {
        Self {
            t1: f.window.t1,
            t2: f.window.t2,
            a: f.params.a,
            b: f.params.b,
            c: f.params.c,
            m: f.params.m,
            tc: f.params.tc,
            tc_date: f.params.tc_date(),
            omega: f.params.omega,
            phi: f.params.phi,
            rmse: f.rmse,
            n_points: f.n_points,
            converged: f.converged,
            n_restarts_used: f.n_restarts_used,
        }
    }
}

impl From<FitRecord> for FitResult {
    fn from(r: FitRecord) -> Self {
        Self {
            window: Window { t1: r.t1, t2: r.t2 },
            params: LpplParams {
                a: r.a,
                b: r.b,
                c: r.c,
                m: r.m,
                tc: r.tc,
                omega: r.omega,
                phi: r.phi,
            },
            rmse: r.rmse,
            n_points: r.n_points,
            converged: r.converged,
            n_restarts_used: r.n_restarts_used,
        }
    }
}

pub fn write_fits_csv(fits: &[FitResult], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for f in fits {
        wtr.serialize(FitRecord::from(f))?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn read_fits_csv(reader: impl Read) -> Result<Vec<FitResult>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize::<FitRecord>()
        .map(|r| Ok(FitResult::from(r?)))
        .collect()
}

/// One JSON object per line.
pub fn write_fits_jsonl(fits: &[FitResult], mut writer: impl Write) -> Result<()> {
    for f in fits {
        serde_json::to_writer(&mut writer, f)?;
        writer
            .write_all(b"\n")
            .map_err(|e| Error::io("<jsonl writer>", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit_with(b: f64, tc: f64, converged: bool) -> FitResult {
        FitResult {
            window: Window {
                t1: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
                t2: NaiveDate::from_ymd_opt(2000, 6, 1).unwrap(),
            },
            params: LpplParams {
                a: 1.0,
                b,
                c: 0.0,
                m: 0.5,
                tc,
                omega: 0.0,
                phi: 0.0,
            },
            rmse: 0.01,
            n_points: 100,
            converged,
            n_restarts_used: 9,
        }
    }

    #[test]
    fn sign_classification() {
        assert_eq!(
            classify_bubble_sign(&fit_with(-0.5, 0.0, true), 0.0),
            BubbleSign::PositiveBubble
        );
        assert_eq!(
            classify_bubble_sign(&fit_with(0.5, 0.0, true), 0.0),
            BubbleSign::NegativeBubble
        );
        assert_eq!(
            classify_bubble_sign(&fit_with(0.0, 0.0, true), 0.0),
            BubbleSign::Indeterminate
        );
        assert_eq!(
            classify_bubble_sign(&fit_with(0.05, 0.0, true), 0.1),
            BubbleSign::Indeterminate
        );
    }

    #[test]
    fn five_point_quantiles() {
        let fits: Vec<_> = [10.0, 20.0, 30.0, 40.0, 50.0]
            .iter()
            .map(|t| fit_with(1.0, *t, true))
            .collect();
        let bands = aggregate_tc_quantiles(&fits, &[(0.2, 0.8), (0.05, 0.95)]).unwrap();
        assert!((bands[0].lower - 18.0).abs() < 1e-12);
        assert!((bands[0].upper - 42.0).abs() < 1e-12);
        assert!((bands[1].lower - 12.0).abs() < 1e-12);
        assert!((bands[1].upper - 48.0).abs() < 1e-12);
    }

    #[test]
    fn shared_tc_is_zero_width() {
        let fits: Vec<_> = (0..7).map(|_| fit_with(1.0, 123.0, true)).collect();
        let band = aggregate_tc_quantiles(&fits, &[(0.2, 0.8)]).unwrap()[0];
        assert_eq!(band.lower, 123.0);
        assert_eq!(band.upper, 123.0);
    }

    #[test]
    fn unconverged_fits_ignored_and_empty_is_error() {
        let fits = vec![fit_with(1.0, 5.0, false)];
        assert!(matches!(
            aggregate_tc_quantiles(&fits, &[(0.2, 0.8)]),
            Err(Error::Empty(_))
        ));
        assert!(aggregate_tc_quantiles(&[], &[(0.2, 0.8)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let fits = vec![
            fit_with(0.25, 11000.5, true),
            fit_with(-0.1, 11020.25, false),
        ];
        let mut buf = Vec::new();
        write_fits_csv(&fits, &mut buf).unwrap();
        assert_eq!(read_fits_csv(buf.as_slice()).unwrap(), fits);

        let mut jl = Vec::new();
        write_fits_jsonl(&fits, &mut jl).unwrap();
        let lines: Vec<FitResult> = String::from_utf8(jl)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines, fits);
    }
}
