//! Pattern recognition of rebound-bearing fits.
//!
//! Learning fits are split into Class I (critical time within `delta` days of
//! a realized rebound) and Class II (no rebound nearby). Each fit parameter is
//! discretized into bins built from pooled learning-set quantiles; a
//! `(parameter, bin)` pair is a trait. A trait is a Class I feature when it
//! occurs in more than `alpha` of Class I fits and less than `beta` of Class II
//! fits, and symmetrically for Class II.
//!
//! The alarm index of a day collects the fits whose critical time lies within
//! `delta` of it and returns `nu_I / (nu_I + nu_II)`, the share of Class I
//! feature occurrences among all feature occurrences, or 0 when there are none.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrema::EventSet;
use crate::lppl::FitResult;
use crate::stats::quantile_sorted;
use crate::timeseries::{day_number, PriceSeries, TradingDay};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLabel {
    ClassI,
    ClassII,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    pub fit: FitResult,
    pub label: ClassLabel,
    /// Calendar days from `tc` to the closest rebound, `inf` without rebounds.
    pub nearest_rebound_distance: f64,
}

/// Fit quantities that are discretized into traits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraitParam {
    M,
    Omega,
    B,
    COverB,
    Rmse,
    /// Window length `t2 - t1`, days.
    Dt,
    /// `tc - t2`, days.
    TcGap,
}

impl TraitParam {
    pub const ALL: [TraitParam; 7] = [
        TraitParam::M,
        TraitParam::Omega,
        TraitParam::B,
        TraitParam::COverB,
        TraitParam::Rmse,
        TraitParam::Dt,
        TraitParam::TcGap,
    ];

    pub fn value(self, fit: &FitResult) -> f64 {
        let p = &fit.params;
        match self {
            TraitParam::M => p.m,
            TraitParam::Omega => p.omega,
            TraitParam::B => p.b,
            TraitParam::COverB => {
                if p.b != 0.0 {
                    p.c / p.b
                } else if p.c == 0.0 {
                    0.0
                } else {
                    p.c.signum() * f64::MAX
                }
            }
            TraitParam::Rmse => fit.rmse,
            TraitParam::Dt => fit.window.length_days() as f64,
            TraitParam::TcGap => fit.tc_gap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Trait {
    pub param: TraitParam,
    pub bin: usize,
}

/// Bin edges for one parameter. `edges.len() + 1` bins, outer bins open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBins {
    pub param: TraitParam,
    pub edges: Vec<f64>,
}

impl ParamBins {
    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    /// Bin `i` covers `[edges[i - 1], edges[i])`.
    pub fn bin_of(&self, value: f64) -> usize {
        self.edges.partition_point(|e| *e <= value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitBinning {
    pub params: Vec<ParamBins>,
}

impl TraitBinning {
    /// One trait per binned parameter.
    pub fn traits_of(&self, fit: &FitResult) -> Vec<Trait> {
        self.params
            .iter()
            .map(|pb| Trait {
                param: pb.param,
                bin: pb.bin_of(pb.param.value(fit)),
            })
            .collect()
    }

    pub fn all_traits(&self) -> impl Iterator<Item = Trait> + '_ {
        self.params.iter().flat_map(|pb| {
            (0..pb.n_bins()).map(|bin| Trait {
                param: pb.param,
                bin,
            })
        })
    }
}

/// Labels each fit by the distance from its `tc` to the nearest rebound.
pub fn label_fits(fits: &[FitResult], rebounds: &EventSet, delta: f64) -> Vec<LabeledFit> {
    if rebounds.is_empty() {
        log::warn!("no rebounds: every fit is labelled Class II");
    }
    let rb: Vec<f64> = rebounds.days.iter().map(|d| day_number(d.date)).collect();
    fits.iter()
        .map(|fit| {
            let tc = fit.params.tc;
            let i = rb.partition_point(|r| *r < tc);
            let dist = [i.checked_sub(1), Some(i)]
                .into_iter()
                .flatten()
                .filter_map(|j| rb.get(j))
                .map(|r| (tc - r).abs())
                .fold(f64::INFINITY, f64::min);
            LabeledFit {
                fit: fit.clone(),
                label: if dist <= delta {
                    ClassLabel::ClassI
                } else {
                    ClassLabel::ClassII
                },
                nearest_rebound_distance: dist,
            }
        })
        .collect()
}

/// Quantile bin edges per parameter over the pooled learning fits.
pub fn build_binning(learning: &[LabeledFit], bins_per_parameter: usize) -> Result<TraitBinning> {
    if learning.len() < 10 {
        return Err(Error::Empty("need at least 10 learning fits to build bins"));
    }
    if bins_per_parameter == 0 {
        return Err(Error::Config("bins per parameter must be positive".into()));
    }
    let params = TraitParam::ALL
        .iter()
        .map(|&param| {
            let mut values: Vec<f64> = learning.iter().map(|l| param.value(&l.fit)).collect();
            values.sort_by(f64::total_cmp);
            let mut edges: Vec<f64> = (1..bins_per_parameter)
                .map(|k| quantile_sorted(&values, k as f64 / bins_per_parameter as f64))
                .collect();
            edges.dedup();
            // an edge at the minimum would leave the lowest bin empty by construction
            edges.retain(|e| *e > values[0]);
            if edges.is_empty() && bins_per_parameter > 1 {
                log::warn!("parameter {param:?} is constant over the learning set; single bin");
            }
            ParamBins { param, edges }
        })
        .collect();
    Ok(TraitBinning { params })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitFrequency {
    #[serde(rename = "trait")]
    pub trait_: Trait,
    pub freq_i: f64,
    pub freq_ii: f64,
    pub feature_i: bool,
    pub feature_ii: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub alpha: f64,
    pub beta: f64,
    pub binning: TraitBinning,
    pub features_i: BTreeSet<Trait>,
    pub features_ii: BTreeSet<Trait>,
    pub class_frequencies: Vec<TraitFrequency>,
    pub n_class_i: usize,
    pub n_class_ii: usize,
    /// Latest window end among the learning fits.
    pub trained_through: NaiveDate,
}

impl FeatureSet {
    pub fn write_json(&self, writer: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }

    pub fn read_json(reader: impl Read) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    /// Feature occurrences among the traits of `fit`.
    pub fn count(&self, fit: &FitResult) -> AlarmCounts {
        let mut c = AlarmCounts::default();
        for t in self.binning.traits_of(fit) {
            if self.features_i.contains(&t) {
                c.nu_i += 1;
            }
            if self.features_ii.contains(&t) {
                c.nu_ii += 1;
            }
        }
        c
    }
}

/// Keeps traits whose class occurrence rates pass the `(alpha, beta)` rule.
pub fn qualify_features(
    labeled: &[LabeledFit],
    binning: &TraitBinning,
    alpha: f64,
    beta: f64,
) -> Result<FeatureSet> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::Config(format!(
            "alpha and beta must lie in [0, 1], got {alpha}, {beta}"
        )));
    }
    let n_i = labeled
        .iter()
        .filter(|l| l.label == ClassLabel::ClassI)
        .count();
    let n_ii = labeled.len() - n_i;
    if n_i == 0 || n_ii == 0 {
        return Err(Error::Empty("both classes need at least one learning fit"));
    }
    let mut counts: std::collections::BTreeMap<Trait, (usize, usize)> =
        binning.all_traits().map(|t| (t, (0, 0))).collect();
    for l in labeled {
        for t in binning.traits_of(&l.fit) {
            let e = counts.entry(t).or_default();
            match l.label {
                ClassLabel::ClassI => e.0 += 1,
                ClassLabel::ClassII => e.1 += 1,
            }
        }
    }
    let mut features_i = BTreeSet::new();
    let mut features_ii = BTreeSet::new();
    let class_frequencies = counts
        .into_iter()
        .map(|(t, (ci, cii))| {
            let freq_i = ci as f64 / n_i as f64;
            let freq_ii = cii as f64 / n_ii as f64;
            let feature_i = freq_i > alpha && freq_ii < beta;
            let feature_ii = freq_ii > alpha && freq_i < beta;
            if feature_i {
                features_i.insert(t);
            }
            if feature_ii {
                features_ii.insert(t);
            }
            TraitFrequency {
                trait_: t,
                freq_i,
                freq_ii,
                feature_i,
                feature_ii,
            }
        })
        .collect();
    let trained_through = labeled
        .iter()
        .map(|l| l.fit.window.t2)
        .max()
        .expect("labeled is non-empty");
    Ok(FeatureSet {
        alpha,
        beta,
        binning: binning.clone(),
        features_i,
        features_ii,
        class_frequencies,
        n_class_i: n_i,
        n_class_ii: n_ii,
        trained_through,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlarmCounts {
    pub nu_i: usize,
    pub nu_ii: usize,
}

impl AlarmCounts {
    /// `nu_I / (nu_I + nu_II)`, or 0 when both are zero.
    pub fn index(&self) -> f64 {
        let total = self.nu_i + self.nu_ii;
        if total > 0 {
            self.nu_i as f64 / total as f64
        } else {
            0.0
        }
    }
}

impl std::ops::AddAssign for AlarmCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.nu_i += rhs.nu_i;
        self.nu_ii += rhs.nu_ii;
    }
}

/// Rebound alarm index of `day` from the fits whose `tc` is within `proximity`
/// calendar days of it.
pub fn alarm_index(
    day: NaiveDate,
    fits: &[FitResult],
    features: &FeatureSet,
    proximity: f64,
) -> f64 {
    let t = day_number(day);
    let mut counts = AlarmCounts::default();
    for f in fits.iter().filter(|f| (f.params.tc - t).abs() <= proximity) {
        counts += features.count(f);
    }
    counts.index()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmConfig {
    pub from: NaiveDate,
    pub to: NaiveDate,
    /// Calendar days between a fit's `tc` and the scored day.
    pub proximity: f64,
    /// Start of the out-of-sample period; features must be learned strictly before it.
    pub split: Option<NaiveDate>,
    /// Only fits whose window ends on or before the scored day contribute.
    #[serde(default)]
    pub causal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlarmPoint {
    pub day: TradingDay,
    pub ri: f64,
}

/// Alarm index on every trading day in `[from, to]`.
///
/// Trading-day indices refer to `series`.
pub fn alarm_series(
    series: &PriceSeries,
    fits: &[FitResult],
    features: &FeatureSet,
    config: &AlarmConfig,
) -> Result<Vec<AlarmPoint>> {
    if let Some(split) = config.split {
        if features.trained_through >= split {
            return Err(Error::Lookahead(format!(
                "features learned through {} but out-of-sample period starts {split}",
                features.trained_through
            )));
        }
    }
    if config.from > config.to
        || config.to < series.first_date()
        || config.from > series.last_date()
    {
        return Err(Error::Config(format!(
            "alarm span {}..{} outside series {}..{}",
            config.from,
            config.to,
            series.first_date(),
            series.last_date()
        )));
    }
    // per-fit feature counts, sorted by tc for range lookup
    let mut indexed: Vec<(f64, NaiveDate, AlarmCounts)> = fits
        .iter()
        .map(|f| (f.params.tc, f.window.t2, features.count(f)))
        .filter(|(_, _, c)| c.nu_i + c.nu_ii > 0)
        .collect();
    indexed.sort_by(|a, b| a.0.total_cmp(&b.0));

    let lo = series.lower_bound(config.from);
    let hi = series.upper_bound(config.to);
    Ok(series.days()[lo..hi]
        .par_iter()
        .map(|day| {
            let t = day_number(day.date);
            let start = indexed.partition_point(|(tc, _, _)| *tc < t - config.proximity);
            let mut counts = AlarmCounts::default();
            for (_, t2, c) in indexed[start..]
                .iter()
                .take_while(|(tc, _, _)| *tc <= t + config.proximity)
            {
                if !config.causal || *t2 <= day.date {
                    counts += *c;
                }
            }
            AlarmPoint {
                day: *day,
                ri: counts.index(),
            }
        })
        .collect())
}

pub fn write_alarm_csv(points: &[AlarmPoint], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["date", "ri"])?;
    for p in points {
        wtr.write_record([p.day.date.format("%Y-%m-%d").to_string(), p.ri.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Reads `date,ri` rows back onto the trading days of `series`.
pub fn read_alarm_csv(reader: impl Read, series: &PriceSeries) -> Result<Vec<AlarmPoint>> {
    #[derive(Deserialize)]
    struct Row {
        date: NaiveDate,
        ri: f64,
    }
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize::<Row>()
        .enumerate()
        .map(|(line, row)| {
            let row = row?;
            let i = series.lower_bound(row.date);
            match series.days().get(i) {
                Some(day) if day.date == row.date => Ok(AlarmPoint {
                    day: *day,
                    ri: row.ri,
                }),
                _ => Err(Error::BadDate {
                    line: line as u64 + 2,
                    value: format!("{} is not a trading day of the series", row.date),
                }),
            }
        })
        .collect()
}

/// Learning protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Fits whose window ends before this date form the learning set.
    pub split: NaiveDate,
    /// Class I proximity, calendar days.
    pub delta: f64,
    pub bins_per_parameter: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Keep only fits with `B > 0` (negative bubbles).
    pub negative_bubbles_only: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            split: NaiveDate::from_ymd_opt(1975, 1, 1).unwrap(),
            delta: 20.0,
            bins_per_parameter: 3,
            alpha: 0.4,
            beta: 0.3,
            negative_bubbles_only: true,
        }
    }
}

/// Fits eligible for training or scoring under `config`.
pub fn eligible_fits<'a>(
    fits: &'a [FitResult],
    config: &TrainConfig,
) -> impl Iterator<Item = &'a FitResult> {
    let neg = config.negative_bubbles_only;
    fits.iter()
        .filter(move |f| f.converged && (!neg || f.params.b > 0.0))
}

/// Labels the learning fits, bins them and qualifies features.
pub fn train(
    fits: &[FitResult],
    rebounds: &EventSet,
    config: &TrainConfig,
) -> Result<(Vec<LabeledFit>, FeatureSet)> {
    let learning: Vec<FitResult> = eligible_fits(fits, config)
        .filter(|f| f.window.t2 < config.split)
        .cloned()
        .collect();
    let labeled = label_fits(&learning, rebounds, config.delta);
    let binning = build_binning(&labeled, config.bins_per_parameter)?;
    let features = qualify_features(&labeled, &binning, config.alpha, config.beta)?;
    Ok((labeled, features))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrema::{DetectionRule, EventKind};
    use crate::lppl::LpplParams;
    use crate::windows::Window;
    use chrono::Duration;
    use proptest::prelude::*;

    fn day(n: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(1970, 1, 1).unwrap() + Duration::days(n)
    }

    fn fit(tc: f64, m: f64) -> FitResult {
        FitResult {
            window: Window {
                t1: day(0),
                t2: day(100),
            },
            params: LpplParams {
                a: 1.0,
                b: 0.1,
                c: 0.01,
                m,
                tc,
                omega: 8.0,
                phi: 1.0,
            },
            rmse: 0.01,
            n_points: 70,
            converged: true,
            n_restarts_used: 9,
        }
    }

    fn rebounds(days: &[i64]) -> EventSet {
        EventSet {
            kind: EventKind::Rebound,
            days: days
                .iter()
                .enumerate()
                .map(|(i, d)| TradingDay {
                    date: day(*d),
                    index: i,
                })
                .collect(),
            rule: DetectionRule::Extremum { radius: 200 },
        }
    }

    /// Binning over `m` only, edges at 0.4 and 0.6.
    fn m_binning() -> TraitBinning {
        TraitBinning {
            params: vec![ParamBins {
                param: TraitParam::M,
                edges: vec![0.4, 0.6],
            }],
        }
    }

    #[test]
    fn labels_by_proximity() {
        let rb = rebounds(&[500]);
        let l = label_fits(&[fit(500.0, 0.5)], &rb, 0.0);
        assert_eq!(l[0].label, ClassLabel::ClassI);
        assert_eq!(l[0].nearest_rebound_distance, 0.0);
        let l = label_fits(&[fit(521.0, 0.5)], &rb, 20.0);
        assert_eq!(l[0].label, ClassLabel::ClassII);
        let l = label_fits(&[fit(500.0, 0.5)], &rebounds(&[]), 20.0);
        assert_eq!(l[0].label, ClassLabel::ClassII);
        assert!(l[0].nearest_rebound_distance.is_infinite());
    }

    #[test]
    fn ten_fit_label_table() {
        let rb = rebounds(&[300, 700, 1100]);
        // (tc, expected distance, expected label with delta = 20)
        let table = [
            (250.0, 50.0, ClassLabel::ClassII),
            (285.0, 15.0, ClassLabel::ClassI),
            (300.0, 0.0, ClassLabel::ClassI),
            (320.0, 20.0, ClassLabel::ClassI),
            (320.5, 20.5, ClassLabel::ClassII),
            (500.0, 200.0, ClassLabel::ClassII),
            (690.0, 10.0, ClassLabel::ClassI),
            (900.0, 200.0, ClassLabel::ClassII),
            (1115.0, 15.0, ClassLabel::ClassI),
            (1400.0, 300.0, ClassLabel::ClassII),
        ];
        let fits: Vec<_> = table.iter().map(|(tc, _, _)| fit(*tc, 0.5)).collect();
        let labeled = label_fits(&fits, &rb, 20.0);
        for (l, (_, dist, label)) in labeled.iter().zip(table) {
            assert_eq!(l.nearest_rebound_distance, dist);
            assert_eq!(l.label, label);
        }
    }

    #[test]
    fn tercile_binning() {
        let labeled: Vec<_> = (1..=9)
            .map(|i| LabeledFit {
                fit: fit(0.0, i as f64),
                label: if i % 2 == 0 {
                    ClassLabel::ClassI
                } else {
                    ClassLabel::ClassII
                },
                nearest_rebound_distance: 0.0,
            })
            .chain(std::iter::once(LabeledFit {
                fit: fit(0.0, 5.0),
                label: ClassLabel::ClassI,
                nearest_rebound_distance: 0.0,
            }))
            .collect();
        // pooled m values {1..9, 5}: h = 9/3 = 3 -> 4.0, h = 6 -> 6.0
        let b = build_binning(&labeled, 3).unwrap();
        assert_eq!(b.params[0].param, TraitParam::M);
        assert_eq!(b.params[0].edges, vec![4.0, 6.0]);

        // values 1..9 alone: edges 3.667 and 6.333, occupancy 3/3/3
        let vals: Vec<f64> = (1..=9).map(f64::from).collect();
        let edges = [
            quantile_sorted(&vals, 1.0 / 3.0),
            quantile_sorted(&vals, 2.0 / 3.0),
        ];
        assert!((edges[0] - 3.6667).abs() < 1e-3 && (edges[1] - 6.3333).abs() < 1e-3);
        let pb = ParamBins {
            param: TraitParam::M,
            edges: edges.to_vec(),
        };
        let mut occ = [0; 3];
        for v in vals {
            occ[pb.bin_of(v)] += 1;
        }
        assert_eq!(occ, [3, 3, 3]);
    }

    #[test]
    fn constant_parameter_gets_one_bin() {
        let labeled: Vec<_> = (0..12)
            .map(|_| LabeledFit {
                fit: fit(0.0, 0.5),
                label: ClassLabel::ClassI,
                nearest_rebound_distance: 0.0,
            })
            .collect();
        let b = build_binning(&labeled, 3).unwrap();
        for pb in &b.params {
            assert_eq!(pb.n_bins(), 1);
        }
        assert!(build_binning(&labeled[..5], 3).is_err());
    }

    #[test]
    fn qualification_rule() {
        // 10 Class I fits: 9 in the high m bin; 10 Class II fits: 1 in the high bin
        let mut labeled = Vec::new();
        for i in 0..10 {
            let m = if i < 9 { 0.8 } else { 0.3 };
            labeled.push(LabeledFit {
                fit: fit(0.0, m),
                label: ClassLabel::ClassI,
                nearest_rebound_distance: 0.0,
            });
            let m = if i < 1 { 0.8 } else { 0.3 };
            labeled.push(LabeledFit {
                fit: fit(0.0, m),
                label: ClassLabel::ClassII,
                nearest_rebound_distance: 99.0,
            });
        }
        let fs = qualify_features(&labeled, &m_binning(), 0.5, 0.3).unwrap();
        let high = Trait {
            param: TraitParam::M,
            bin: 2,
        };
        let low = Trait {
            param: TraitParam::M,
            bin: 0,
        };
        assert!(fs.features_i.contains(&high));
        assert!(fs.features_ii.contains(&low));
        assert_eq!(fs.features_i.len(), 1);
        assert_eq!(fs.features_ii.len(), 1);
        let freq = fs
            .class_frequencies
            .iter()
            .find(|f| f.trait_ == high)
            .unwrap();
        assert!((freq.freq_i - 0.9).abs() < 1e-12 && (freq.freq_ii - 0.1).abs() < 1e-12);
    }

    #[test]
    fn equal_frequencies() {
        let mut labeled = Vec::new();
        for i in 0..4 {
            let m = if i < 2 { 0.8 } else { 0.3 };
            labeled.push(LabeledFit {
                fit: fit(0.0, m),
                label: ClassLabel::ClassI,
                nearest_rebound_distance: 0.0,
            });
            labeled.push(LabeledFit {
                fit: fit(0.0, m),
                label: ClassLabel::ClassII,
                nearest_rebound_distance: 99.0,
            });
        }
        let high = Trait {
            param: TraitParam::M,
            bin: 2,
        };
        let fs = qualify_features(&labeled, &m_binning(), 0.4, 0.45).unwrap();
        assert!(!fs.features_i.contains(&high) && !fs.features_ii.contains(&high));
        let fs = qualify_features(&labeled, &m_binning(), 0.4, 0.6).unwrap();
        assert!(fs.features_i.contains(&high) && fs.features_ii.contains(&high));
    }

    #[test]
    fn twenty_fit_truth_table() {
        // per fit: (m, label). Bins: [<0.4], [0.4, 0.6), [>=0.6]
        let script = [
            (0.1, ClassLabel::ClassI),
            (0.5, ClassLabel::ClassI),
            (0.7, ClassLabel::ClassI),
            (0.7, ClassLabel::ClassI),
            (0.8, ClassLabel::ClassI),
            (0.9, ClassLabel::ClassI),
            (0.65, ClassLabel::ClassI),
            (0.45, ClassLabel::ClassI),
            (0.1, ClassLabel::ClassII),
            (0.2, ClassLabel::ClassII),
            (0.3, ClassLabel::ClassII),
            (0.35, ClassLabel::ClassII),
            (0.15, ClassLabel::ClassII),
            (0.5, ClassLabel::ClassII),
            (0.55, ClassLabel::ClassII),
            (0.45, ClassLabel::ClassII),
            (0.7, ClassLabel::ClassII),
            (0.05, ClassLabel::ClassII),
            (0.25, ClassLabel::ClassII),
            (0.38, ClassLabel::ClassII),
        ];
        let labeled: Vec<_> = script
            .iter()
            .map(|(m, l)| LabeledFit {
                fit: fit(0.0, *m),
                label: *l,
                nearest_rebound_distance: 0.0,
            })
            .collect();
        // hand counts: Class I (8): low 1, mid 2, high 5 -> .125 .25 .625
        //              Class II (12): low 8, mid 3, high 1 -> .667 .25 .0833
        let fs = qualify_features(&labeled, &m_binning(), 0.5, 0.2).unwrap();
        let t = |bin| Trait {
            param: TraitParam::M,
            bin,
        };
        assert_eq!(fs.features_i, [t(2)].into_iter().collect());
        assert_eq!(fs.features_ii, [t(0)].into_iter().collect());
        let fs = qualify_features(&labeled, &m_binning(), 0.2, 0.3).unwrap();
        // mid bin: .25 in both classes passes both directions
        assert_eq!(fs.features_i, [t(1), t(2)].into_iter().collect());
        assert_eq!(fs.features_ii, [t(0), t(1)].into_iter().collect());
    }

    #[test]
    fn empty_class_is_error() {
        let labeled: Vec<_> = (0..5)
            .map(|_| LabeledFit {
                fit: fit(0.0, 0.5),
                label: ClassLabel::ClassI,
                nearest_rebound_distance: 0.0,
            })
            .collect();
        assert!(qualify_features(&labeled, &m_binning(), 0.5, 0.3).is_err());
    }

    fn feature_set(features_i: &[Trait], features_ii: &[Trait]) -> FeatureSet {
        FeatureSet {
            alpha: 0.5,
            beta: 0.3,
            binning: m_binning(),
            features_i: features_i.iter().copied().collect(),
            features_ii: features_ii.iter().copied().collect(),
            class_frequencies: vec![],
            n_class_i: 1,
            n_class_ii: 1,
            trained_through: day(50),
        }
    }

    #[test]
    fn alarm_index_arithmetic() {
        let hi = Trait {
            param: TraitParam::M,
            bin: 2,
        };
        let lo = Trait {
            param: TraitParam::M,
            bin: 0,
        };
        let fs = feature_set(&[hi], &[lo]);
        assert_eq!(alarm_index(day(100), &[], &fs, 20.0), 0.0);
        let fits = vec![
            fit(100.0, 0.8),
            fit(101.0, 0.8),
            fit(95.0, 0.9),
            fit(110.0, 0.1),
            fit(500.0, 0.1),
        ];
        assert_eq!(alarm_index(day(100), &fits, &fs, 20.0), 0.75);
        assert_eq!(alarm_index(day(100), &fits[..3], &fs, 20.0), 1.0);
        assert_eq!(AlarmCounts { nu_i: 3, nu_ii: 1 }.index(), 0.75);
    }

    fn short_series() -> PriceSeries {
        let dates: Vec<_> = (80..130).map(day).collect();
        PriceSeries::new(dates, vec![1.0; 50]).unwrap()
    }

    #[test]
    fn alarm_series_locality() {
        let hi = Trait {
            param: TraitParam::M,
            bin: 2,
        };
        let fs = feature_set(&[hi], &[]);
        let s = short_series();
        let cfg = AlarmConfig {
            from: day(80),
            to: day(129),
            proximity: 5.0,
            split: None,
            causal: false,
        };
        let zero = alarm_series(&s, &[], &fs, &cfg).unwrap();
        assert!(zero.iter().all(|p| p.ri == 0.0));
        let pts = alarm_series(&s, &[fit(100.0, 0.8)], &fs, &cfg).unwrap();
        for p in &pts {
            let near = (day_number(p.day.date) - 100.0).abs() <= 5.0;
            assert_eq!(p.ri, if near { 1.0 } else { 0.0 }, "{p:?}");
        }
        // matches the unindexed definition
        let fits = vec![fit(100.0, 0.8), fit(103.0, 0.3), fit(90.0, 0.1)];
        let fs = feature_set(
            &[hi],
            &[Trait {
                param: TraitParam::M,
                bin: 0,
            }],
        );
        for p in alarm_series(&s, &fits, &fs, &cfg).unwrap() {
            assert_eq!(p.ri, alarm_index(p.day.date, &fits, &fs, 5.0));
        }
    }

    #[test]
    fn causal_scoring_ignores_unfinished_windows() {
        let fs = feature_set(
            &[Trait {
                param: TraitParam::M,
                bin: 2,
            }],
            &[],
        );
        let s = short_series();
        let cfg = AlarmConfig {
            from: day(80),
            to: day(129),
            proximity: 5.0,
            split: None,
            causal: true,
        };
        let pts = alarm_series(&s, &[fit(100.0, 0.8)], &fs, &cfg).unwrap();
        for p in &pts {
            let t = day_number(p.day.date);
            let on = (95.0..=105.0).contains(&t) && p.day.date >= day(100);
            assert_eq!(p.ri, if on { 1.0 } else { 0.0 }, "{p:?}");
        }
    }

    #[test]
    fn alarm_csv_round_trip() {
        let fs = feature_set(
            &[Trait {
                param: TraitParam::M,
                bin: 2,
            }],
            &[],
        );
        let s = short_series();
        let cfg = AlarmConfig {
            from: day(80),
            to: day(129),
            proximity: 5.0,
            split: None,
            causal: false,
        };
        let pts = alarm_series(&s, &[fit(100.0, 0.8), fit(104.0, 0.1)], &fs, &cfg).unwrap();
        let mut buf = Vec::new();
        write_alarm_csv(&pts, &mut buf).unwrap();
        assert_eq!(read_alarm_csv(buf.as_slice(), &s).unwrap(), pts);
        assert!(read_alarm_csv("date,ri\n1969-01-01,0.5\n".as_bytes(), &s).is_err());
    }

    #[test]
    fn alarm_series_rejects_lookahead_and_bad_span() {
        let fs = feature_set(&[], &[]);
        let s = short_series();
        let cfg = AlarmConfig {
            from: day(80),
            to: day(129),
            proximity: 5.0,
            split: Some(day(50)),
            causal: false,
        };
        assert!(matches!(
            alarm_series(&s, &[], &fs, &cfg),
            Err(Error::Lookahead(_))
        ));
        let cfg = AlarmConfig {
            from: day(200),
            to: day(300),
            proximity: 5.0,
            split: None,
            causal: false,
        };
        assert!(alarm_series(&s, &[], &fs, &cfg).is_err());
    }

    #[test]
    fn feature_set_json_round_trip() {
        let fs = feature_set(
            &[Trait {
                param: TraitParam::M,
                bin: 2,
            }],
            &[Trait {
                param: TraitParam::M,
                bin: 0,
            }],
        );
        let mut buf = Vec::new();
        fs.write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"edges\""));
        assert_eq!(FeatureSet::read_json(buf.as_slice()).unwrap(), fs);
    }

    fn arb_fits() -> impl Strategy<Value = Vec<FitResult>> {
        proptest::collection::vec((80.0f64..130.0, 0.01f64..0.99), 0..12)
            .prop_map(|v| v.into_iter().map(|(tc, m)| fit(tc, m)).collect())
    }

    fn arb_features() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (
            proptest::collection::vec(0usize..3, 0..3),
            proptest::collection::vec(0usize..3, 0..3),
        )
    }

    proptest! {
        #[test]
        fn ri_is_bounded(fits in arb_fits(), (fi, fii) in arb_features(), d in 70i64..140) {
            let t = |b| Trait { param: TraitParam::M, bin: b };
            let fs = feature_set(&fi.into_iter().map(t).collect::<Vec<_>>(), &fii.into_iter().map(t).collect::<Vec<_>>());
            let ri = alarm_index(day(d), &fits, &fs, 10.0);
            prop_assert!((0.0..=1.0).contains(&ri));
        }

        #[test]
        fn ri_invariant_under_bin_relabeling(fits in arb_fits(), (fi, fii) in arb_features(), d in 70i64..140) {
            // reverse bin ids: mirror the m axis so bin b becomes 2 - b, and relabel features to match
            let t = |b| Trait { param: TraitParam::M, bin: b };
            let fs = feature_set(&fi.iter().map(|b| t(*b)).collect::<Vec<_>>(), &fii.iter().map(|b| t(*b)).collect::<Vec<_>>());
            let mut mirrored = feature_set(
                &fi.iter().map(|b| t(2 - *b)).collect::<Vec<_>>(),
                &fii.iter().map(|b| t(2 - *b)).collect::<Vec<_>>(),
            );
            mirrored.binning = TraitBinning { params: vec![ParamBins { param: TraitParam::M, edges: vec![-0.6, -0.4] }] };
            let flipped: Vec<FitResult> = fits
                .iter()
                .map(|f| {
                    let mut g = f.clone();
                    // keep the value off the edges so the mirror maps half-open bins exactly
                    g.params.m = -f.params.m;
                    g
                })
                .filter(|g| g.params.m != -0.4 && g.params.m != -0.6)
                .collect();
            let kept: Vec<FitResult> = fits.iter().filter(|f| f.params.m != 0.4 && f.params.m != 0.6).cloned().collect();
            prop_assert_eq!(
                alarm_index(day(d), &kept, &fs, 10.0),
                alarm_index(day(d), &flipped, &mirrored, 10.0)
            );
        }

        #[test]
        fn adding_class_i_only_fit_never_lowers_ri(fits in arb_fits(), (fi, fii) in arb_features(), d in 70i64..140, tc in 70.0f64..140.0) {
            let t = |b| Trait { param: TraitParam::M, bin: b };
            let mut fi: Vec<usize> = fi;
            fi.push(2);
            let fii: Vec<usize> = fii.into_iter().filter(|b| *b != 2).collect();
            let fs = feature_set(&fi.into_iter().map(t).collect::<Vec<_>>(), &fii.into_iter().map(t).collect::<Vec<_>>());
            let before = alarm_index(day(d), &fits, &fs, 10.0);
            let mut more = fits.clone();
            more.push(fit(tc, 0.9));
            prop_assert!(alarm_index(day(d), &more, &fs, 10.0) >= before);
        }
    }
}
