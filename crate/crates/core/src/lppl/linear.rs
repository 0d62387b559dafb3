//! Linear parameters of the LPPL model given its nonlinear ones.
//!
//! For fixed `(m, tc, omega, phi)` the model is linear in `(A, B, C)`; for fixed
//! `(m, tc, omega)` it is linear in `(A, B, C cos phi, C sin phi)`. Both are
//! solved by Householder QR on a reusable buffer, so the fitter's inner loop
//! does not allocate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size of a QR pivot below which a column is treated as dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearParams {
    pub m: f64,
    pub tc: f64,
    pub omega: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub sse: f64,
}

/// Ordinary least squares for `(A, B, C)` with the nonlinear four held fixed.
///
/// `times` are model days, `log_prices` the observations. Needs at least six
/// observations, all strictly before `tc`.
pub fn solve_linear_params(
    nonlinear: &NonlinearParams,
    times: &[f64],
    log_prices: &[f64],
) -> Result<LinearSolution> {
    let n = times.len();
    if n != log_prices.len() {
        return Err(Error::InvalidSeries(
            "times and prices differ in length".into(),
        ));
    }
    if n < 6 {
        return Err(Error::Empty(
            "need at least 6 observations for 3 linear parameters",
        ));
    }
    if let Some(t) = times.iter().find(|t| **t >= nonlinear.tc) {
        return Err(Error::PastCriticalTime {
            t: *t,
            tc: nonlinear.tc,
        });
    }
    let mut ws = LeastSquares::new(n, 3);
    for (i, &t) in times.iter().enumerate() {
        let x = nonlinear.tc - t;
        let lx = x.ln();
        let xm = (nonlinear.m * lx).exp();
        ws.set_row(
            i,
            &[1.0, xm, xm * (nonlinear.omega * lx - nonlinear.phi).cos()],
        );
    }
    let mut coef = [0.0; 3];
    let sse = ws
        .solve(log_prices, &mut coef)
        .ok_or_else(|| Error::Degenerate(format!("rank-deficient design at {nonlinear:?}")))?;
    Ok(LinearSolution {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        sse,
    })
}

/// Column-major dense least-squares workspace for `k <= 4` columns.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    n: usize,
    k: usize,
    design: Vec<f64>,
    qr: Vec<f64>,
    rhs: Vec<f64>,
}

impl LeastSquares {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        assert!(k <= 4 && n >= k);
        Self {
            n,
            k,
            design: vec![0.0; n * k],
            qr: vec![0.0; n * k],
            rhs: vec![0.0; n],
        }
    }

    #[inline]
    pub(crate) fn set_row(&mut self, i: usize, row: &[f64]) {
        for (j, v) in row.iter().enumerate() {
            self.design[j * self.n + i] = *v;
        }
    }

    /// Minimizes `|X beta - y|^2`, writes `beta` into `coef` and returns the
    /// residual sum of squares, or `None` if the design is rank deficient or
    /// not finite.
    pub(crate) fn solve(&mut self, y: &[f64], coef: &mut [f64]) -> Option<f64> {
        let (n, k) = (self.n, self.k);
        self.qr.copy_from_slice(&self.design);
        self.rhs.copy_from_slice(y);
        let mut diag = [0.0f64; 4];

        for j in 0..k {
            let col_norm = self.design[j * n..(j + 1) * n]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            let (head, tail) = self.qr.split_at_mut((j + 1) * n);
            let col = &mut head[j * n..];
            let norm = col[j..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite()
                || !col_norm.is_finite()
                || norm <= RANK_TOL * col_norm
                || norm == 0.0
            {
                return None;
            }
            let alpha = if col[j] > 0.0 { -norm } else { norm };
            col[j] -= alpha;
            let vnorm2: f64 = col[j..].iter().map(|v| v * v).sum();
            diag[j] = alpha;
            if vnorm2 == 0.0 {
                continue;
            }
            let v = &col[j..];
            for c in 0..k - j - 1 {
                let other = &mut tail[c * n + j..(c + 1) * n];
                let s = 2.0 * v.iter().zip(other.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm2;
                for (o, vi) in other.iter_mut().zip(v) {
                    *o -= s * vi;
                }
            }
            let r = &mut self.rhs[j..];
            let s = 2.0 * v.iter().zip(r.iter()).map(|(a, b)| a * b).sum::<f64>() / vnorm2;
            for (o, vi) in r.iter_mut().zip(v) {
                *o -= s * vi;
            }
        }

        for j in (0..k).rev() {
            let mut acc = self.rhs[j];
            for c in j + 1..k {
                acc -= self.qr[c * n + j] * coef[c];
            }
            coef[j] = acc / diag[j];
        }

        let mut sse = 0.0;
        for i in 0..n {
            let mut fit = 0.0;
            for j in 0..k {
                fit += self.design[j * n + i] * coef[j];
            }
            let r = y[i] - fit;
            sse += r * r;
        }
        if sse.is_finite() && coef[..k].iter().all(|c| c.is_finite()) {
            Some(sse)
        } else {
            None
        }
    }
}
