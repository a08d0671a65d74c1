#![allow(dead_code)]

use chrono::{Days, NaiveDate};
use ndarray::{Array1, Array2};
use qrfuse::lp::{solve, LpProblem, LpStatus, SolveOptions, SparseRow};
use qrfuse::{Dataset, QuantileFit, TauGrid, TimeSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn grid5() -> TauGrid {
    TauGrid::new(vec![0.1, 0.3, 0.5, 0.7, 0.9]).unwrap()
}

/// Heteroskedastic linear model on covariates with arbitrary ranges.
pub fn instance(seed: u64, t: usize, k: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
    let width: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..20.0)).collect();
    let slope: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mut x = Array2::zeros((t, k));
    let mut y = Array1::zeros(t);
    for i in 0..t {
        let mut mean = 1.0;
        let mut sd = 1.0;
        for j in 0..k {
            let u: f64 = rng.random();
            x[[i, j]] = lo[j] + width[j] * u;
            mean += slope[j] * x[[i, j]];
            sd += 0.5 * u;
        }
        let e: f64 = rng.sample(StandardNormal);
        y[i] = mean + sd * e;
    }
    Dataset::new(x, y).unwrap()
}

/// Covariates mirrored around zero, so every column has mean 0 and
/// `min = -max`.
pub fn symmetric_instance(seed: u64, half: usize, k: usize) -> Dataset {
    let base = instance(seed, half, k);
    let mut x = Array2::zeros((2 * half, k));
    let mut y = Array1::zeros(2 * half);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    for i in 0..half {
        for j in 0..k {
            x[[i, j]] = base.x()[[i, j]];
            x[[half + i, j]] = -base.x()[[i, j]];
        }
        y[i] = base.y()[i];
        let e: f64 = rng.sample(StandardNormal);
        y[half + i] = 1.0 - base.x().row(i).sum() + (1.0 + 0.3 * x[[i, 0]].abs()) * e;
    }
    Dataset::new(x, y).unwrap()
}

/// BRW written directly in levels: `b_q = b_{q-1} + δ_q`, with an auxiliary
/// `n_{jq} ≥ max(0, -δ_{jq})` and the worst case over `[0,1]^K`,
/// `δ_{0q} - Σ_j n_{jq} ≥ 0`. Returns `(K+1) × Q` levels.
pub fn brw_levels_oracle(ds: &Dataset, grid: &TauGrid) -> Array2<f64> {
    let (t_n, k) = (ds.n_obs(), ds.n_covariates());
    let taus = grid.taus();
    let q_n = taus.len();
    // b⁺, b⁻ per (j, q), then n per (j ≥ 1, q ≥ 1), then residuals.
    let b = |q: usize, j: usize, neg: bool| 2 * (q * (k + 1) + j) + neg as usize;
    let n_b = 2 * (k + 1) * q_n;
    let nv = |q: usize, j: usize| n_b + (q - 1) * k + (j - 1);
    let n_n = k * (q_n - 1);
    let r = |q: usize, t: usize, neg: bool| n_b + n_n + 2 * (q * t_n + t) + neg as usize;
    let mut c = vec![0.0; n_b + n_n + 2 * t_n * q_n];
    for (q, &tau) in taus.iter().enumerate() {
        for t in 0..t_n {
            c[r(q, t, false)] = tau;
            c[r(q, t, true)] = 1.0 - tau;
        }
    }
    let mut p = LpProblem::new(c);
    for (q, _) in taus.iter().enumerate() {
        for t in 0..t_n {
            let mut row = vec![(b(q, 0, false), 1.0), (b(q, 0, true), -1.0)];
            for j in 1..=k {
                let v = ds.x()[[t, j - 1]];
                row.push((b(q, j, false), v));
                row.push((b(q, j, true), -v));
            }
            row.push((r(q, t, false), 1.0));
            row.push((r(q, t, true), -1.0));
            p.add_eq(SparseRow::new(row), ds.y()[t]);
        }
    }
    for q in 1..q_n {
        for j in 1..=k {
            // -(b_q - b_{q-1}) - n ≤ 0
            p.add_ub(
                SparseRow::new(vec![
                    (b(q, j, false), -1.0),
                    (b(q, j, true), 1.0),
                    (b(q - 1, j, false), 1.0),
                    (b(q - 1, j, true), -1.0),
                    (nv(q, j), -1.0),
                ]),
                0.0,
            );
        }
        let mut row = vec![
            (b(q, 0, false), -1.0),
            (b(q, 0, true), 1.0),
            (b(q - 1, 0, false), 1.0),
            (b(q - 1, 0, true), -1.0),
        ];
        for j in 1..=k {
            row.push((nv(q, j), 1.0));
        }
        p.add_ub(SparseRow::new(row), 0.0);
    }
    let sol = solve(&p, SolveOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    let mut out = Array2::zeros((k + 1, q_n));
    for q in 0..q_n {
        for j in 0..=k {
            out[[j, q]] = sol.z[b(q, j, false)] - sol.z[b(q, j, true)];
        }
    }
    out
}

/// Intercepts in row 0, slopes below, matching `brw_levels_oracle`.
pub fn levels(fit: &QuantileFit) -> Array2<f64> {
    let (k, q_n) = (fit.n_covariates(), fit.n_quantiles());
    let mut out = Array2::zeros((k + 1, q_n));
    for q in 0..q_n {
        out[[0, q]] = fit.xi[q];
        for j in 0..k {
            out[[j + 1, q]] = fit.beta[[j, q]];
        }
    }
    out
}

/// Levels of a fit on min-max scaled covariates, in original units.
pub fn back_transform_levels(scaled: &Array2<f64>, ds: &Dataset) -> Array2<f64> {
    let stats = ds.column_stats();
    let mut out = scaled.clone();
    for q in 0..scaled.ncols() {
        let mut shift = 0.0;
        for (j, s) in stats.iter().enumerate() {
            out[[j + 1, q]] = scaled[[j + 1, q]] / s.range();
            shift += out[[j + 1, q]] * s.min;
        }
        out[[0, q]] -= shift;
    }
    out
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest range of any slope across quantiles.
pub fn slope_spread(fit: &QuantileFit) -> f64 {
    fit.beta
        .rows()
        .into_iter()
        .map(|r| {
            let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
            hi - lo
        })
        .fold(0.0, f64::max)
}

pub fn tick(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        (tau - 1.0) * u
    } else {
        tau * u
    }
}

/// Order statistic `y_(⌈nτ⌉)`, a minimiser of the summed tick loss.
pub fn empirical_quantile(y: &[f64], tau: f64) -> f64 {
    let mut s = y.to_vec();
    s.sort_by(f64::total_cmp);
    let k = ((s.len() as f64 * tau).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

/// `y_t = 0.5 y_{t-1} + x_{t-1} + (1 + |x_{t-1}|) e_t` with an AR(1)
/// regressor `x`, on consecutive days.
pub fn ar1_series(seed: u64, n: usize) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = vec![0.0; n];
    let mut x = vec![0.0; n];
    for t in 1..n {
        let a: f64 = rng.sample(StandardNormal);
        let e: f64 = rng.sample(StandardNormal);
        x[t] = 0.7 * x[t - 1] + a;
        y[t] = 0.5 * y[t - 1] + 0.5 * x[t - 1] + (1.0 + x[t - 1].abs()) * e;
    }
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let dates = (0..n)
        .map(|t| start.checked_add_days(Days::new(t as u64)).unwrap())
        .collect();
    let regs = Array2::from_shape_vec((n, 1), x).unwrap();
    TimeSeries::new(dates, Array1::from(y), regs, vec!["x".into()]).unwrap()
}
