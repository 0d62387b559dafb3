//! Multistart calibration of the LPPL model on one window.
//!
//! The linear parameters are profiled out. For the LPPL model the phase is
//! profiled too, through the equivalent linear form
//! `C cos(w L - phi) = C1 cos(w L) + C2 sin(w L)`, leaving a bounded search
//! over `(m, tc, omega)`. The search probes a shifted Halton sequence, starts
//! Nelder-Mead from the best distinct probes and polishes the winner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::LeastSquares;
use super::model::LpplParams;
use super::simplex::{minimize, SimplexOptions, SimplexResult};
use crate::error::{Error, Result};
use crate::timeseries::{day_number, PriceSeries};
use crate::windows::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// `A + B (tc - t)^m`
    PowerLaw,
    /// `A + B (tc - t)^m + C (tc - t)^m cos(omega ln(tc - t) - phi)`
    Lppl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub model: ModelKind,
    pub m_bounds: (f64, f64),
    pub omega_bounds: (f64, f64),
    /// Smallest admissible `tc - t2`, days.
    pub tc_min_gap: f64,
    /// Largest admissible `tc - t2` as a fraction of the window length.
    pub tc_max_fraction: f64,
    /// Quasi-random probes evaluated before local descent.
    pub n_probes: usize,
    /// Local descents started from the best distinct probes.
    pub n_restarts: usize,
    /// Objective evaluations allowed per local descent.
    pub max_evals: usize,
    pub min_points: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Lppl,
            m_bounds: (0.001, 0.999),
            omega_bounds: (2.0, 25.0),
            tc_min_gap: 1.0,
            tc_max_fraction: 0.5,
            n_probes: 256,
            n_restarts: 8,
            max_evals: 1000,
            min_points: 30,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let (m0, m1) = self.m_bounds;
        let (w0, w1) = self.omega_bounds;
        if !(0.0 < m0 && m0 < m1 && m1 < 1.0) {
            return Err(Error::Config(format!(
                "m bounds must satisfy 0 < lo < hi < 1, got {:?}",
                self.m_bounds
            )));
        }
        if !(0.0 < w0 && w0 < w1) {
            return Err(Error::Config(format!(
                "bad omega bounds {:?}",
                self.omega_bounds
            )));
        }
        if !(self.tc_min_gap > 0.0 && self.tc_max_fraction > 0.0) {
            return Err(Error::Config("tc bounds must be positive".into()));
        }
        if self.n_probes == 0 || self.n_restarts == 0 || self.max_evals == 0 {
            return Err(Error::Config(
                "probe, restart and evaluation budgets must be positive".into(),
            ));
        }
        if self.min_points < 7 {
            return Err(Error::Config("min_points must be at least 7".into()));
        }
        Ok(())
    }
}

/// Calibrated model on one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub window: Window,
    pub params: LpplParams,
    pub rmse: f64,
    pub n_points: usize,
    pub converged: bool,
    pub n_restarts_used: usize,
}

impl FitResult {
    /// `tc - t2` in days.
    pub fn tc_gap(&self) -> f64 {
        self.params.tc - day_number(self.window.t2)
    }
}

/// Fits the configured model to the log-prices of `series` inside `window`.
pub fn fit_window(
    series: &PriceSeries,
    window: &Window,
    search: &SearchConfig,
) -> Result<FitResult> {
    search.validate()?;
    let sub = series.slice(window)?;
    if sub.len() < search.min_points {
        return Err(Error::TooFewPoints {
            t1: window.t1,
            t2: window.t2,
            n: sub.len(),
            min: search.min_points,
        });
    }
    fit_observations(&sub.times(), &sub.log_prices(), window, search)
}

struct Objective<'a> {
    times: &'a [f64],
    y: &'a [f64],
    t2: f64,
    gap_lo: f64,
    gap_hi: f64,
    search: &'a SearchConfig,
    ws: LeastSquares,
    coef: [f64; 4],
}

impl Objective<'_> {
    fn dim(&self) -> usize {
        match self.search.model {
            ModelKind::PowerLaw => 2,
            ModelKind::Lppl => 3,
        }
    }

    fn decode(&self, u: &[f64]) -> (f64, f64, f64) {
        let (m0, m1) = self.search.m_bounds;
        let m = m0 + u[0] * (m1 - m0);
        let tc = self.t2 + self.gap_lo + u[1] * (self.gap_hi - self.gap_lo);
        let omega = match self.search.model {
            ModelKind::PowerLaw => 0.0,
            ModelKind::Lppl => {
                let (w0, w1) = self.search.omega_bounds;
                w0 + u[2] * (w1 - w0)
            }
        };
        (m, tc, omega)
    }

    /// Sum of squared residuals with the linear parameters profiled out.
    fn sse(&mut self, u: &[f64]) -> Option<f64> {
        let (m, tc, omega) = self.decode(u);
        for (i, &t) in self.times.iter().enumerate() {
            let x = tc - t;
            let lx = x.ln();
            let xm = (m * lx).exp();
            match self.search.model {
                ModelKind::PowerLaw => self.ws.set_row(i, &[1.0, xm]),
                ModelKind::Lppl => {
                    let (s, c) = (omega * lx).sin_cos();
                    self.ws.set_row(i, &[1.0, xm, xm * c, xm * s]);
                }
            }
        }
        self.ws.solve(self.y, &mut self.coef)
    }
}

/// Fits already-extracted observations (model days and log-prices).
pub(crate) fn fit_observations(
    times: &[f64],
    log_prices: &[f64],
    window: &Window,
    search: &SearchConfig,
) -> Result<FitResult> {
    let n = times.len();
    let k = match search.model {
        ModelKind::PowerLaw => 2,
        ModelKind::Lppl => 4,
    };
    let t2 = day_number(window.t2);
    let last = times.last().copied().unwrap_or(t2);
    let gap_lo = search.tc_min_gap + (last - t2).max(0.0);
    let gap_hi = (search.tc_max_fraction * window.length_days() as f64).max(gap_lo * 2.0);
    let mut obj = Objective {
        times,
        y: log_prices,
        t2,
        gap_lo,
        gap_hi,
        search,
        ws: LeastSquares::new(n, k),
        coef: [0.0; 4],
    };
    let dim = obj.dim();

    let mut rng = ChaCha8Rng::seed_from_u64(window_seed(search.seed, window));
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let mut probes: Vec<(Vec<f64>, f64)> = (1..=search.n_probes)
        .filter_map(|i| {
            let u: Vec<f64> = (0..dim)
                .map(|d| (radical_inverse(i as u64, PRIMES[d]) + shift[d]).fract())
                .collect();
            obj.sse(&u).map(|f| (u, f))
        })
        .collect();
    if probes.is_empty() {
        return Err(Error::AllRestartsDegenerate(search.n_probes));
    }
    probes.sort_by(|a, b| a.1.total_cmp(&b.1));
    let starts = distinct_starts(&probes, search.n_restarts, 0.05);

    let opts = SimplexOptions {
        max_evals: search.max_evals,
        ..SimplexOptions::default()
    };
    let mut runs: Vec<SimplexResult> = Vec::with_capacity(starts.len() + 1);
    for start in &starts {
        runs.push(minimize(
            |u| obj.sse(u).unwrap_or(f64::INFINITY),
            start,
            &opts,
        ));
    }

    let pick = |runs: &[SimplexResult]| -> Option<usize> {
        let best_of = |filter: &dyn Fn(&SimplexResult) -> bool| {
            runs.iter()
                .enumerate()
                .filter(|(_, r)| r.f.is_finite() && filter(r))
                .min_by(|a, b| a.1.f.total_cmp(&b.1.f))
                .map(|(i, _)| i)
        };
        best_of(&|r| r.converged).or_else(|| best_of(&|_| true))
    };
    let Some(best) = pick(&runs) else {
        return Err(Error::AllRestartsDegenerate(runs.len()));
    };

    // polish: a fresh, small simplex at the incumbent guards against premature collapse
    let polish_opts = SimplexOptions {
        initial_step: 0.01,
        ..opts
    };
    let polished = minimize(
        |u| obj.sse(u).unwrap_or(f64::INFINITY),
        &runs[best].x,
        &polish_opts,
    );
    runs.push(polished);
    let best = pick(&runs).expect("non-empty after polish");
    let winner = runs[best].clone();

    let (m, tc, omega) = obj.decode(&winner.x);
    let sse = obj.sse(&winner.x).ok_or_else(|| {
        Error::Degenerate(format!(
            "best point of window {}..{} is degenerate",
            window.t1, window.t2
        ))
    })?;
    let coef = obj.coef;
    let params = match search.model {
        ModelKind::PowerLaw => LpplParams {
            a: coef[0],
            b: coef[1],
            c: 0.0,
            m,
            tc,
            omega: 0.0,
            phi: 0.0,
        },
        ModelKind::Lppl => {
            let (c1, c2) = (coef[2], coef[3]);
            LpplParams {
                a: coef[0],
                b: coef[1],
                c: c1.hypot(c2),
                m,
                tc,
                omega,
                phi: c2.atan2(c1).rem_euclid(std::f64::consts::TAU),
            }
        }
    };
    Ok(FitResult {
        window: *window,
        params,
        rmse: (sse / n as f64).sqrt(),
        n_points: n,
        converged: winner.converged,
        n_restarts_used: runs.len(),
    })
}

/// Outcome of fitting every window of a grid.
#[derive(Debug, Clone, Default)]
pub struct ScanReport {
    pub fits: Vec<FitResult>,
    /// Windows that produced no fit, with the reason.
    pub skipped: Vec<(Window, String)>,
}

/// Fits every window in parallel; output order follows `windows`.
pub fn scan(series: &PriceSeries, windows: &[Window], search: &SearchConfig) -> Result<ScanReport> {
    search.validate()?;
    let times = series.times();
    let y = series.log_prices();
    let outcomes: Vec<Result<FitResult>> = windows
        .par_iter()
        .map(|w| {
            let lo = series.lower_bound(w.t1);
            let hi = series.upper_bound(w.t2);
            let n = hi.saturating_sub(lo);
            if n < search.min_points {
                return Err(Error::TooFewPoints {
                    t1: w.t1,
                    t2: w.t2,
                    n,
                    min: search.min_points,
                });
            }
            fit_observations(&times[lo..hi], &y[lo..hi], w, search)
        })
        .collect();
    let mut report = ScanReport::default();
    for (w, outcome) in windows.iter().zip(outcomes) {
        match outcome {
            Ok(fit) => report.fits.push(fit),
            Err(e) => report.skipped.push((*w, e.to_string())),
        }
    }
    Ok(report)
}

const PRIMES: [u64; 3] = [2, 3, 5];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Best-first selection of probes at least `min_dist` apart (max-norm),
/// topped up with the next best if too few are distinct.
fn distinct_starts(sorted: &[(Vec<f64>, f64)], count: usize, min_dist: f64) -> Vec<Vec<f64>> {
    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(count);
    for (u, _) in sorted {
        if chosen.len() == count {
            break;
        }
        let far = chosen.iter().all(|c| {
            c.iter()
                .zip(u)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
                >= min_dist
        });
        if far {
            chosen.push(u.clone());
        }
    }
    for (u, _) in sorted {
        if chosen.len() == count {
            break;
        }
        if !chosen.contains(u) {
            chosen.push(u.clone());
        }
    }
    chosen
}

/// SplitMix64 over the root seed and the window bounds.
fn window_seed(seed: u64, window: &Window) -> u64 {
    let mut z = seed;
    for v in [
        day_number(window.t1) as i64 as u64,
        day_number(window.t2) as i64 as u64,
    ] {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(v);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}
