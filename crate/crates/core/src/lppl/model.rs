use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{date_from_day_number, day_number};

/// `log p(t) = A + B (tc - t)^m`.
///
/// `tc` is model time in days (see [`day_number`]); it may be fractional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub tc: f64,
}

/// `log p(t) = A + B (tc - t)^m + C (tc - t)^m cos(omega ln(tc - t) - phi)`.
///
/// `C = 0` encodes a pure power law; `omega` and `phi` are then reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
    pub tc: f64,
    pub omega: f64,
    pub phi: f64,
}

impl PowerLawParams {
    pub fn eval(&self, t: f64) -> Result<f64> {
        let dt = time_to_critical(t, self.tc)?;
        Ok(self.a + self.b * dt.powf(self.m))
    }

    pub fn eval_date(&self, date: NaiveDate) -> Result<f64> {
        self.eval(day_number(date))
    }

    pub fn tc_date(&self) -> NaiveDate {
        date_from_day_number(self.tc)
    }
}

impl LpplParams {
    pub fn eval(&self, t: f64) -> Result<f64> {
        let dt = time_to_critical(t, self.tc)?;
        let xm = dt.powf(self.m);
        Ok(self.a + self.b * xm + self.c * xm * (self.omega * dt.ln() - self.phi).cos())
    }

    pub fn eval_date(&self, date: NaiveDate) -> Result<f64> {
        self.eval(day_number(date))
    }

    pub fn tc_date(&self) -> NaiveDate {
        date_from_day_number(self.tc)
    }

    pub fn power_law(&self) -> PowerLawParams {
        PowerLawParams {
            a: self.a,
            b: self.b,
            m: self.m,
            tc: self.tc,
        }
    }

    pub fn from_power_law(p: PowerLawParams) -> Self {
        Self {
            a: p.a,
            b: p.b,
            c: 0.0,
            m: p.m,
            tc: p.tc,
            omega: 0.0,
            phi: 0.0,
        }
    }

    /// Oscillation amplitude below the trend amplitude, `|C| < |B|`.
    pub fn oscillation_subdominant(&self) -> bool {
        self.c.abs() < self.b.abs()
    }
}

fn time_to_critical(t: f64, tc: f64) -> Result<f64> {
    let dt = tc - t;
    if dt > 0.0 {
        Ok(dt)
    } else {
        Err(Error::PastCriticalTime { t, tc })
    }
}

pub fn eval_power_law(params: &PowerLawParams, t: f64) -> Result<f64> {
    params.eval(t)
}

pub fn eval_lppl(params: &LpplParams, t: f64) -> Result<f64> {
    params.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_amplitude_is_constant() {
        let p = PowerLawParams {
            a: 2.5,
            b: 0.0,
            m: 0.4,
            tc: 100.0,
        };
        for t in [0.0, 50.0, 99.9] {
            assert_eq!(p.eval(t).unwrap(), 2.5);
        }
    }

    #[test]
    fn power_law_arithmetic() {
        let p = PowerLawParams {
            a: 1.0,
            b: -1.0,
            m: 0.5,
            tc: 100.0,
        };
        assert!((p.eval(96.0).unwrap() + 1.0).abs() < 1e-15);

        let p = PowerLawParams {
            a: 1.0,
            b: 1.0,
            m: 0.5,
            tc: 100.0,
        };
        assert!((p.eval(91.0).unwrap() - 4.0).abs() < 1e-15);
        // negative-bubble shape: decreasing into tc
        let vals: Vec<f64> = (0..99).map(|t| p.eval(t as f64).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn at_or_past_tc_is_error() {
        let p = PowerLawParams {
            a: 1.0,
            b: 1.0,
            m: 0.5,
            tc: 100.0,
        };
        assert!(p.eval(100.0).is_err());
        assert!(p.eval(101.0).is_err());
        let l = LpplParams::from_power_law(p);
        assert!(matches!(l.eval(100.0), Err(Error::PastCriticalTime { .. })));
    }

    #[test]
    fn one_day_before_tc() {
        let p = LpplParams {
            a: 1.0,
            b: -0.3,
            c: 0.05,
            m: 0.6,
            tc: 500.0,
            omega: 7.0,
            phi: 1.1,
        };
        let expected = 1.0 - 0.3 + 0.05 * (-1.1f64).cos();
        assert!((p.eval(499.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn oscillation_zero_crossings() {
        // residual over trend vanishes where omega ln(tc - t) - phi = pi/2 mod pi
        let p = LpplParams {
            a: 0.0,
            b: -0.5,
            c: 0.1,
            m: 0.5,
            tc: 1000.0,
            omega: 6.0,
            phi: 0.7,
        };
        let residual = |t: f64| p.eval(t).unwrap() - p.power_law().eval(t).unwrap();
        // predicted roots: ln x = (phi + pi/2 + k pi) / omega
        let roots: Vec<f64> = (0..4)
            .map(|k| p.tc - ((p.phi + PI / 2.0 + k as f64 * PI) / p.omega).exp())
            .filter(|t| *t < p.tc - 1.5)
            .collect();
        assert!(!roots.is_empty());
        for root in roots {
            // bisection on a bracket around the predicted root
            let (mut lo, mut hi) = (root - 0.2, root + 0.2);
            assert!(residual(lo).signum() != residual(hi).signum());
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if residual(mid).signum() == residual(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((0.5 * (lo + hi) - root).abs() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn lppl_without_oscillation_is_power_law(
            a in -5.0f64..5.0, b in -3.0f64..3.0, m in 0.01f64..0.99,
            tc in 100.0f64..1e4, omega in 2.0f64..25.0, phi in 0.0f64..std::f64::consts::TAU,
            back in 0.01f64..99.0,
        ) {
            let l = LpplParams { a, b, c: 0.0, m, tc, omega, phi };
            let t = tc - back;
            prop_assert_eq!(l.eval(t).unwrap(), l.power_law().eval(t).unwrap());
        }

        #[test]
        fn positive_bubble_trend_is_convex_and_rising(
            b in 0.01f64..2.0, m in 0.05f64..0.95, tc in 500.0f64..2000.0,
        ) {
            let up = PowerLawParams { a: 1.0, b: -b, m, tc };
            let down = PowerLawParams { a: 1.0, b, m, tc };
            let grid: Vec<f64> = (0..50).map(|i| i as f64 * (tc - 1.0) / 50.0).collect();
            let f: Vec<f64> = grid.iter().map(|t| up.eval(*t).unwrap()).collect();
            let g: Vec<f64> = grid.iter().map(|t| down.eval(*t).unwrap()).collect();
            for i in 1..f.len() - 1 {
                prop_assert!(f[i] > f[i - 1]);
                prop_assert!(f[i + 1] - 2.0 * f[i] + f[i - 1] > 0.0);
                prop_assert!(g[i] < g[i - 1]);
                prop_assert!(g[i + 1] - 2.0 * g[i] + g[i - 1] < 0.0);
            }
        }
    }
}
