//! Synthetic price series with known ground truth.
//!
//! Trading calendar: weekdays only, no holidays. Noise is i.i.d. gaussian in
//! log-price, so prices stay positive.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lppl::{LpplParams, PowerLawParams};
use crate::timeseries::{day_number, PriceSeries, TradingDay};

/// Growth `dx/dt = k x^m` with `m > 1`, which blows up at a finite time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityParams {
    pub x0: f64,
    pub k: f64,
    pub m: f64,
}

impl SingularityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.x0 > 0.0 && self.k > 0.0 && self.m > 1.0) {
            return Err(Error::Config(format!(
                "singularity needs x0 > 0, k > 0, m > 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Blow-up time `1 / (k (m - 1) x0^(m - 1))`, measured from `t = 0`.
    pub fn critical_time(&self) -> f64 {
        1.0 / (self.k * (self.m - 1.0) * self.x0.powf(self.m - 1.0))
    }
}

/// `x0 (1 - t / tc)^(1 / (1 - m))` at every grid time.
pub fn singularity_trajectory(x0: f64, m: f64, tc: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if !(x0 > 0.0 && m > 1.0 && tc > 0.0) {
        return Err(Error::Config(
            "singularity needs x0 > 0, m > 1, tc > 0".into(),
        ));
    }
    grid.iter()
        .map(|&t| {
            if t >= tc {
                Err(Error::PastCriticalTime { t, tc })
            } else {
                Ok(x0 * (1.0 - t / tc).powf(1.0 / (1.0 - m)))
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthModel {
    /// Price follows the singular trajectory, with `t = 0` at the span start.
    SingularityOde(SingularityParams),
    PowerLaw(PowerLawParams),
    Lppl(LpplParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub model: SynthModel,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Sidecar record describing what a synthetic series was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    pub n_days: usize,
    /// Critical time in model days.
    pub tc: f64,
}

/// Weekdays from `start` to `end` inclusive.
pub fn weekdays(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect()
}

/// The first `count` weekdays on or after `start`.
pub fn n_weekdays(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    start
        .iter_days()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(count)
        .collect()
}

pub fn synth_lppl_series(spec: &SynthSpec) -> Result<(PriceSeries, GroundTruth)> {
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::Config(format!(
            "noise sigma must be >= 0, got {}",
            spec.noise_sigma
        )));
    }
    let dates = weekdays(spec.start, spec.end);
    let (log_prices, tc): (Vec<f64>, f64) = match spec.model {
        SynthModel::SingularityOde(p) => {
            p.validate()?;
            let origin = day_number(spec.start);
            let grid: Vec<f64> = dates.iter().map(|d| day_number(*d) - origin).collect();
            let tc = p.critical_time();
            let xs = singularity_trajectory(p.x0, p.m, tc, &grid)?;
            (xs.iter().map(|x| x.ln()).collect(), origin + tc)
        }
        SynthModel::PowerLaw(p) => (
            dates
                .iter()
                .map(|d| p.eval_date(*d))
                .collect::<Result<_>>()?,
            p.tc,
        ),
        SynthModel::Lppl(p) => (
            dates
                .iter()
                .map(|d| p.eval_date(*d))
                .collect::<Result<_>>()?,
            p.tc,
        ),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let prices = log_prices
        .iter()
        .map(|lp| {
            let eps = if spec.noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            (lp + eps).exp()
        })
        .collect();
    let series = PriceSeries::new(dates, prices)?;
    let truth = GroundTruth {
        spec: spec.clone(),
        n_days: series.len(),
        tc,
    };
    Ok((series, truth))
}

/// Sequence of negative bubbles, each ending in a trough followed by a recovery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub n_bubbles: usize,
    /// Trading days between consecutive troughs.
    pub spacing: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Rebound detection radius the course must stay resolvable at.
    pub radius: usize,
    pub start: NaiveDate,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            n_bubbles: 6,
            spacing: 500,
            noise_sigma: 0.005,
            seed: 7,
            radius: 200,
            start: NaiveDate::from_ymd_opt(1990, 1, 1).unwrap(),
        }
    }
}

/// Per-bubble generating parameters of a planted course.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedBubble {
    pub trough: TradingDay,
    pub params: LpplParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantTruth {
    pub spec: PlantSpec,
    pub bubbles: Vec<PlantedBubble>,
}

impl PlantTruth {
    pub fn trough_days(&self) -> Vec<TradingDay> {
        self.bubbles.iter().map(|b| b.trough).collect()
    }
}

/// Builds a course of `n_bubbles` LPPL negative bubbles with known troughs.
///
/// Trough `k` sits at trading day `spacing / 2 + k * spacing`; the price falls
/// monotonically (up to noise) for `spacing / 2` days into each trough and
/// rises for the rest of the spacing, so every trough is the unique minimum
/// of its `±radius` neighbourhood when `spacing >= 2 * radius`.
pub fn plant_rebound_course(spec: &PlantSpec) -> Result<(PriceSeries, PlantTruth)> {
    if spec.n_bubbles == 0 {
        return Err(Error::Config("need at least one bubble".into()));
    }
    if spec.spacing < 2 * spec.radius || spec.spacing < 60 {
        return Err(Error::Config(format!(
            "spacing {} too small for radius-{} rebound detection",
            spec.spacing, spec.radius
        )));
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(Error::Config(format!(
            "noise sigma must be >= 0, got {}",
            spec.noise_sigma
        )));
    }
    let lead = spec.spacing / 2;
    let n_days = spec.n_bubbles * spec.spacing + 1;
    let dates = n_weekdays(spec.start, n_days);
    let t: Vec<f64> = dates.iter().map(|d| day_number(*d)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut log_p = vec![0.0; n_days];
    let mut bubbles = Vec::with_capacity(spec.n_bubbles);
    let mut level = 4.0;
    let mut seg_start = 0usize;
    for k in 0..spec.n_bubbles {
        let trough = lead + k * spec.spacing;
        let peak = trough - lead;
        // recovery from the previous trough up to this bubble's peak
        if k > 0 {
            let rise = rng.random_range(0.35..0.55);
            let from = seg_start;
            let span = (peak - from) as f64;
            let base = log_p[from];
            for i in from + 1..=peak {
                log_p[i] = base + rise * ((i - from) as f64 / span).powf(0.6);
            }
            level = log_p[peak];
        } else {
            log_p[0] = level;
        }

        let m = rng.random_range(0.4..0.6);
        let omega = rng.random_range(6.0..9.0);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let depth = rng.random_range(0.3..0.45);
        let tc = t[trough] + 1.0;
        let x_peak = tc - t[peak];
        let x_trough = tc - t[trough];
        let ratio = 0.04;
        let osc = |x: f64| 1.0 + ratio * (omega * x.ln() - phi).cos();
        let b = depth / (x_peak.powf(m) * osc(x_peak) - x_trough.powf(m) * osc(x_trough));
        let a = level - b * x_peak.powf(m) * osc(x_peak);
        let params = LpplParams {
            a,
            b,
            c: ratio * b,
            m,
            tc,
            omega,
            phi,
        };
        for i in peak..=trough {
            log_p[i] = params.eval(t[i])?;
        }
        bubbles.push(PlantedBubble {
            trough: TradingDay {
                date: dates[trough],
                index: trough,
            },
            params,
        });
        seg_start = trough;
    }
    // final recovery
    let from = seg_start;
    let span = (n_days - 1 - from) as f64;
    let base = log_p[from];
    for i in from + 1..n_days {
        log_p[i] = base + 0.4 * ((i - from) as f64 / span).powf(0.6);
    }

    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let prices = log_p
        .iter()
        .map(|lp| {
            let eps = if spec.noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            (lp + eps).exp()
        })
        .collect();
    let series = PriceSeries::new(dates, prices)?;
    Ok((
        series,
        PlantTruth {
            spec: spec.clone(),
            bubbles,
        },
    ))
}
