//! Nelder-Mead on the unit box `[0, 1]^k`.
//!
//! Trial points are projected onto the box. Non-finite objective values are
//! treated as `+inf`, so infeasible regions repel the simplex.

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    pub initial_step: f64,
    pub max_evals: usize,
    /// Simplex diameter (max-norm) below which the search stops.
    pub xtol: f64,
    /// Relative spread of objective values below which the search stops.
    pub ftol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_evals: 1000,
            xtol: 1e-9,
            ftol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    #[allow(dead_code)]
    pub evals: usize,
    pub converged: bool,
}

pub(crate) fn minimize<F>(mut f: F, start: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let k = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    pts.push(start.iter().map(|v| v.clamp(0.0, 1.0)).collect());
    for i in 0..k {
        let mut p = pts[0].clone();
        // step inward when the start sits on the upper face
        p[i] = if p[i] + opts.initial_step <= 1.0 {
            p[i] + opts.initial_step
        } else {
            p[i] - opts.initial_step
        };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p, &mut evals)).collect();

    let mut centroid = vec![0.0; k];
    let mut trial = vec![0.0; k];
    let mut trial2 = vec![0.0; k];
    let mut converged = false;

    while evals < opts.max_evals {
        // order best..worst
        let mut order: Vec<usize> = (0..=k).collect();
        order.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]));
        pts = order.iter().map(|i| pts[*i].clone()).collect();
        vals = order.iter().map(|i| vals[*i]).collect();

        let best = vals[0];
        let worst = vals[k];
        let diameter = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        let spread = worst - best;
        if best.is_finite()
            && (diameter <= opts.xtol || spread <= opts.ftol * best.abs() + f64::MIN_POSITIVE)
        {
            converged = true;
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for p in &pts[..k] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / k as f64;
            }
        }
        let along = |coef: f64, out: &mut Vec<f64>, worst: &[f64], centroid: &[f64]| {
            for i in 0..out.len() {
                out[i] = (centroid[i] + coef * (centroid[i] - worst[i])).clamp(0.0, 1.0);
            }
        };

        along(1.0, &mut trial, &pts[k], &centroid);
        let fr = eval(&trial, &mut evals);
        if fr < vals[0] {
            along(2.0, &mut trial2, &pts[k], &centroid);
            let fe = eval(&trial2, &mut evals);
            if fe < fr {
                pts[k].copy_from_slice(&trial2);
                vals[k] = fe;
            } else {
                pts[k].copy_from_slice(&trial);
                vals[k] = fr;
            }
            continue;
        }
        if fr < vals[k - 1] {
            pts[k].copy_from_slice(&trial);
            vals[k] = fr;
            continue;
        }
        // contraction, outside if the reflection improved on the worst
        let outside = fr < vals[k];
        along(
            if outside { 0.5 } else { -0.5 },
            &mut trial2,
            &pts[k],
            &centroid,
        );
        let fc = eval(&trial2, &mut evals);
        if (outside && fc <= fr) || (!outside && fc < vals[k]) {
            pts[k].copy_from_slice(&trial2);
            vals[k] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=k {
            for j in 0..k {
                pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
            }
            vals[i] = eval(&pts[i], &mut evals);
        }
    }

    let (bi, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("simplex is non-empty");
    SimplexResult {
        x: pts[bi].clone(),
        f: vals[bi],
        evals,
        converged,
    }
}
