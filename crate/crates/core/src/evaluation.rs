//! Error diagrams for the rebound alarm index.
//!
//! For a threshold `T`, the alarm set holds every day with `RI > T` plus the
//! `duration` trading days that follow it. A rebound inside the alarm set is
//! predicted. Each threshold gives one point (alarm fraction, miss fraction);
//! the anti-diagonal `y = 1 - x` is what random alarms achieve.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrema::EventSet;
use crate::pattern::AlarmPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDiagramPoint {
    pub threshold: f64,
    pub alarm_fraction: f64,
    pub miss_fraction: f64,
}

/// Positions (into `ri`) of the days in the alarm set for threshold `threshold`.
///
/// `ri` must cover a contiguous run of trading days.
pub fn build_alarm_set(ri: &[AlarmPoint], threshold: f64, duration: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    // covered up to (exclusive) position
    let mut covered = 0usize;
    for (i, p) in ri.iter().enumerate() {
        if p.ri > threshold {
            let end = (i + duration + 1).min(ri.len());
            out.extend(i.max(covered)..end);
            covered = covered.max(end);
        }
    }
    out
}

fn alarm_mask(ri: &[AlarmPoint], threshold: f64, duration: usize) -> Vec<bool> {
    let mut mask = vec![false; ri.len()];
    let mut remaining = 0usize;
    for (i, p) in ri.iter().enumerate() {
        if p.ri > threshold {
            remaining = duration + 1;
        }
        if remaining > 0 {
            mask[i] = true;
            remaining -= 1;
        }
    }
    mask
}

/// Thresholds below, at and above every distinct RI value.
pub fn auto_thresholds(ri: &[AlarmPoint]) -> Vec<f64> {
    let mut v: Vec<f64> = ri.iter().map(|p| p.ri).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let mut out = Vec::with_capacity(v.len() + 2);
    out.push(f64::NEG_INFINITY);
    out.extend(v);
    out.push(f64::INFINITY);
    out
}

/// One point per threshold, sorted by ascending threshold.
pub fn error_diagram(
    ri: &[AlarmPoint],
    rebounds: &EventSet,
    thresholds: &[f64],
    duration: usize,
) -> Result<Vec<ErrorDiagramPoint>> {
    if ri.is_empty() {
        return Err(Error::Empty("alarm series"));
    }
    let first = ri[0].day.index;
    let last = ri[ri.len() - 1].day.index;
    if last + 1 - first != ri.len() {
        return Err(Error::InvalidSeries(
            "alarm series is not a contiguous trading-day span".into(),
        ));
    }
    let targets: Vec<usize> = rebounds
        .days
        .iter()
        .filter(|d| (first..=last).contains(&d.index))
        .map(|d| d.index - first)
        .collect();
    if targets.is_empty() {
        return Err(Error::Empty("no rebounds inside the alarm span"));
    }
    let mut thresholds = thresholds.to_vec();
    if thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::Config("NaN threshold".into()));
    }
    thresholds.sort_by(f64::total_cmp);
    Ok(thresholds
        .par_iter()
        .map(|&threshold| {
            let mask = alarm_mask(ri, threshold, duration);
            let alarmed = mask.iter().filter(|m| **m).count();
            let missed = targets.iter().filter(|&&i| !mask[i]).count();
            ErrorDiagramPoint {
                threshold,
                alarm_fraction: alarmed as f64 / ri.len() as f64,
                miss_fraction: missed as f64 / targets.len() as f64,
            }
        })
        .collect())
}

/// Area between the anti-diagonal and the curve (trapezoids over alarm
/// fraction). Positive when the predictor beats random alarms.
pub fn skill_summary(points: &[ErrorDiagramPoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Empty("need at least two error-diagram points"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a.alarm_fraction
            .total_cmp(&b.alarm_fraction)
            .then(b.miss_fraction.total_cmp(&a.miss_fraction))
    });
    Ok(pts
        .windows(2)
        .map(|w| {
            let (x0, x1) = (w[0].alarm_fraction, w[1].alarm_fraction);
            let g0 = 1.0 - x0 - w[0].miss_fraction;
            let g1 = 1.0 - x1 - w[1].miss_fraction;
            0.5 * (g0 + g1) * (x1 - x0)
        })
        .sum())
}

/// Lowest miss fraction reachable with at most `max_alarm` of the time in alarm.
pub fn miss_at_alarm(points: &[ErrorDiagramPoint], max_alarm: f64) -> f64 {
    points
        .iter()
        .filter(|p| p.alarm_fraction <= max_alarm)
        .map(|p| p.miss_fraction)
        .fold(1.0, f64::min)
}

/// `threshold,alarm_fraction,miss_fraction` rows.
pub fn write_error_diagram_csv(points: &[ErrorDiagramPoint], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for p in points {
        wtr.serialize(p)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Plot-ready columns: the curve and the anti-diagonal at the same abscissae.
pub fn write_plot_csv(points: &[ErrorDiagramPoint], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["alarm_fraction", "miss_fraction", "random"])?;
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a.alarm_fraction
            .total_cmp(&b.alarm_fraction)
            .then(b.miss_fraction.total_cmp(&a.miss_fraction))
    });
    for p in pts {
        wtr.write_record([
            p.alarm_fraction.to_string(),
            p.miss_fraction.to_string(),
            (1.0 - p.alarm_fraction).to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrema::{DetectionRule, EventKind};
    use crate::timeseries::TradingDay;
    use chrono::{Duration, NaiveDate};
    use proptest::prelude::*;

    fn ri_series(values: &[f64]) -> Vec<AlarmPoint> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
        values
            .iter()
            .enumerate()
            .map(|(i, v)| AlarmPoint {
                day: TradingDay {
                    date: start + Duration::days(i as i64),
                    index: i,
                },
                ri: *v,
            })
            .collect()
    }

    fn rebounds_at(ri: &[AlarmPoint], idx: &[usize]) -> EventSet {
        EventSet {
            kind: EventKind::Rebound,
            days: idx.iter().map(|i| ri[*i].day).collect(),
            rule: DetectionRule::Extremum { radius: 200 },
        }
    }

    fn point(x: f64, y: f64) -> ErrorDiagramPoint {
        ErrorDiagramPoint {
            threshold: 0.0,
            alarm_fraction: x,
            miss_fraction: y,
        }
    }

    #[test]
    fn alarm_set_rules() {
        let ri = ri_series(&[0.0; 200]);
        assert!(build_alarm_set(&ri, 0.5, 40).is_empty());

        let mut v = vec![0.0; 200];
        v[50] = 0.9;
        let set = build_alarm_set(&ri_series(&v), 0.5, 40);
        assert_eq!(set.len(), 41);
        assert_eq!(set.iter().next(), Some(&50));
        assert_eq!(set.iter().last(), Some(&90));

        v[60] = 0.8;
        let ri = ri_series(&v);
        let set = build_alarm_set(&ri, 0.5, 40);
        assert_eq!(set.len(), 51);
        let mask = alarm_mask(&ri, 0.5, 40);
        assert_eq!(mask.iter().filter(|m| **m).count(), 51);

        // clipped at the end of the span
        let mut v = vec![0.0; 20];
        v[15] = 1.0;
        assert_eq!(build_alarm_set(&ri_series(&v), 0.5, 40).len(), 5);
    }

    #[test]
    fn endpoints() {
        let v: Vec<f64> = (0..300).map(|i| ((i * 37) % 100) as f64 / 100.0).collect();
        let ri = ri_series(&v);
        let rb = rebounds_at(&ri, &[10, 150, 290]);
        let pts = error_diagram(&ri, &rb, &auto_thresholds(&ri), 40).unwrap();
        let first = pts.first().unwrap();
        let last = pts.last().unwrap();
        assert_eq!((first.alarm_fraction, first.miss_fraction), (1.0, 0.0));
        assert_eq!((last.alarm_fraction, last.miss_fraction), (0.0, 1.0));
        let below = error_diagram(&ri, &rb, &[-0.5], 40).unwrap()[0];
        assert_eq!((below.alarm_fraction, below.miss_fraction), (1.0, 0.0));
        let above = error_diagram(&ri, &rb, &[0.99], 40).unwrap()[0];
        assert_eq!((above.alarm_fraction, above.miss_fraction), (0.0, 1.0));
    }

    #[test]
    fn rebound_on_crossing_day_is_predicted() {
        let mut v = vec![0.0; 100];
        v[30] = 1.0;
        let ri = ri_series(&v);
        let p = error_diagram(&ri, &rebounds_at(&ri, &[30]), &[0.5], 40).unwrap()[0];
        assert_eq!(p.miss_fraction, 0.0);
        let p = error_diagram(&ri, &rebounds_at(&ri, &[29]), &[0.5], 40).unwrap()[0];
        assert_eq!(p.miss_fraction, 1.0);
    }

    #[test]
    fn no_rebounds_is_error() {
        let ri = ri_series(&[0.1; 50]);
        assert!(error_diagram(&ri, &rebounds_at(&ri, &[]), &[0.0], 40).is_err());
    }

    #[test]
    fn skill_cases() {
        let diag = [point(0.0, 1.0), point(0.3, 0.7), point(1.0, 0.0)];
        assert!(skill_summary(&diag).unwrap().abs() < 1e-15);
        let ideal = [point(0.0, 1.0), point(0.0, 0.0), point(1.0, 0.0)];
        assert!((skill_summary(&ideal).unwrap() - 0.5).abs() < 1e-15);
        // gaps g = 1 - x - y: 0, .4, .4, .2, 0 over widths .1 .2 .3 .4
        let five = [
            point(0.0, 1.0),
            point(0.1, 0.5),
            point(0.3, 0.3),
            point(0.6, 0.2),
            point(1.0, 0.0),
        ];
        let hand = 0.5 * (0.0 + 0.4) * 0.1
            + 0.5 * (0.4 + 0.4) * 0.2
            + 0.5 * (0.4 + 0.2) * 0.3
            + 0.5 * (0.2 + 0.0) * 0.4;
        assert!((skill_summary(&five).unwrap() - hand).abs() < 1e-15);
        assert!((hand - 0.23).abs() < 1e-12);
        assert!(skill_summary(&[point(0.0, 1.0)]).is_err());
    }

    #[test]
    fn csv_outputs() {
        let pts = vec![ErrorDiagramPoint {
            threshold: f64::NEG_INFINITY,
            alarm_fraction: 1.0,
            miss_fraction: 0.0,
        }];
        let mut buf = Vec::new();
        write_error_diagram_csv(&pts, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "threshold,alarm_fraction,miss_fraction\n-inf,1.0,0.0\n"
        );
        let mut buf = Vec::new();
        write_plot_csv(&pts, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "alarm_fraction,miss_fraction,random\n1,0,0\n"
        );
    }

    proptest! {
        #[test]
        fn monotone_in_threshold(values in proptest::collection::vec(0.0f64..1.0, 60..200), seed in 0usize..50) {
            let ri = ri_series(&values);
            let idx: Vec<usize> = (0..5).map(|k| (seed + k * 37) % values.len()).collect::<BTreeSet<_>>().into_iter().collect();
            let pts = error_diagram(&ri, &rebounds_at(&ri, &idx), &auto_thresholds(&ri), 10).unwrap();
            for w in pts.windows(2) {
                prop_assert!(w[1].alarm_fraction <= w[0].alarm_fraction);
                prop_assert!(w[1].miss_fraction >= w[0].miss_fraction);
            }
            for p in &pts {
                prop_assert!((0.0..=1.0).contains(&p.alarm_fraction));
                prop_assert!((0.0..=1.0).contains(&p.miss_fraction));
            }
            let set = build_alarm_set(&ri, 0.5, 10);
            let mask = alarm_mask(&ri, 0.5, 10);
            prop_assert_eq!(set.len(), mask.iter().filter(|m| **m).count());
        }
    }
}
