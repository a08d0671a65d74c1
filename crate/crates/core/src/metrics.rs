//! Evaluation measures for fitted and forecast quantiles.

use std::io::Write;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::GammaSolution;
use crate::grid::TauGrid;
use crate::loss::tick;

/// Density floor used by [`log_score`].
pub const DENSITY_FLOOR: f64 = 1e-10;

/// Default threshold above which an estimated difference counts as selected.
pub const DETECTION_TOL: f64 = 1e-4;

/// Which slope differences are non-zero in the data generating process:
/// `K × (Q − 1)`, entry `(j, q)` for variable `j + 1` and the difference
/// between quantiles `q` and `q + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionTruth {
    pub active: Array2<bool>,
}

impl SelectionTruth {
    pub fn n_true(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn n_false(&self) -> usize {
        self.active.len() - self.n_true()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    Uniform,
    Center,
    Left,
}

impl WeightScheme {
    pub const ALL: [WeightScheme; 3] = [
        WeightScheme::Uniform,
        WeightScheme::Center,
        WeightScheme::Left,
    ];

    /// Integrand weight at level `tau`. The uniform weight is 1 so that the
    /// discretised integral is the plain mean of the scores.
    pub fn weight(self, tau: f64) -> f64 {
        match self {
            WeightScheme::Uniform => 1.0,
            WeightScheme::Center => tau * (1.0 - tau),
            WeightScheme::Left => (1.0 - tau) * (1.0 - tau),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::Center => "center",
            WeightScheme::Left => "left",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanWithError {
    pub mean: f64,
    pub std_err: f64,
}

/// Root mean integrated squared error (×100) per quantile.
///
/// `estimates[r]` and `truths[r]` are `points × Q` matrices of estimated and
/// true quantiles for replication `r`. For each replication and quantile the
/// root of the mean squared error over points is taken; the result is
/// `100 ×` the mean of those roots over replications, with standard error
/// `100 × sd / √n`.
pub fn rmise(estimates: &[Array2<f64>], truths: &[Array2<f64>]) -> Result<Vec<MeanWithError>> {
    let n = estimates.len();
    if n < 2 {
        return Err(Error::Domain(format!(
            "rmise needs at least 2 replications, got {n}"
        )));
    }
    if truths.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: truths.len(),
        });
    }
    let q = estimates[0].ncols();
    let mut roots = Array2::<f64>::zeros((n, q));
    for (r, (est, tru)) in estimates.iter().zip(truths).enumerate() {
        if est.dim() != tru.dim() || est.ncols() != q || est.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: tru.len(),
                found: est.len(),
            });
        }
        let sq = (est - tru).mapv(|v| v * v);
        for (c, m) in sq.mean_axis(Axis(0)).unwrap().iter().enumerate() {
            roots[[r, c]] = m.sqrt();
        }
    }
    Ok(roots
        .columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            MeanWithError {
                mean: 100.0 * mean,
                std_err: 100.0 * var.sqrt() / (n as f64).sqrt(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionRates {
    /// Share of true differences detected; `None` without true differences.
    pub tpr: Option<f64>,
    /// Share of zero differences left undetected; `None` without zeros.
    pub tnr: Option<f64>,
}

/// Pooled true positive and true negative rates of slope-difference
/// detection. A difference `(j, q)`, `j ≥ 1`, `q ≥ 2`, is detected when
/// `|γ⁺ − γ⁻| > tol`.
pub fn tpr_tnr(fits: &[GammaSolution], truth: &SelectionTruth, tol: f64) -> Result<SelectionRates> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "detection threshold must be positive, got {tol}"
        )));
    }
    let (k, qd) = truth.active.dim();
    let (mut tp, mut pos, mut tn, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for g in fits {
        if g.plus.dim() != (k + 1, qd + 1) {
            return Err(Error::DimensionMismatch {
                expected: (k + 1) * (qd + 1),
                found: g.plus.len(),
            });
        }
        for j in 0..k {
            for q in 0..qd {
                let detected = (g.plus[[j + 1, q + 1]] - g.minus[[j + 1, q + 1]]).abs() > tol;
                if truth.active[[j, q]] {
                    pos += 1;
                    tp += detected as usize;
                } else {
                    neg += 1;
                    tn += !detected as usize;
                }
            }
        }
    }
    let rate = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    Ok(SelectionRates {
        tpr: rate(tp, pos),
        tnr: rate(tn, neg),
    })
}

/// Tick loss of the realisation against each forecast quantile.
pub fn quantile_score(y: f64, forecast: &[f64], grid: &TauGrid) -> Result<Vec<f64>> {
    if forecast.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: forecast.len(),
        });
    }
    Ok(forecast
        .iter()
        .zip(grid.taus())
        .map(|(f, &tau)| tick(y - f, tau))
        .collect())
}

/// Quantile-weighted CRPS of a `periods × Q` score matrix: the per-period
/// average `(1/Q) Σ_q w(τ_q) QS_{t,q}`, averaged over periods.
pub fn qwcrps(scores: &Array2<f64>, grid: &TauGrid, scheme: WeightScheme) -> Result<f64> {
    if scores.ncols() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: scores.ncols(),
        });
    }
    if scores.nrows() == 0 {
        return Err(Error::Domain("no periods to score".into()));
    }
    let w: Vec<f64> = grid.taus().iter().map(|&t| scheme.weight(t)).collect();
    let q = grid.len() as f64;
    let total: f64 = scores
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&w).map(|(s, w)| s * w).sum::<f64>() / q)
        .sum();
    Ok(total / scores.nrows() as f64)
}

/// Log density at `y` of the piecewise-linear CDF through
/// `(forecast_q, τ_q)`, extended beyond the outer quantiles with the density
/// of the nearest bin and floored at [`DENSITY_FLOOR`].
pub fn log_score(y: f64, forecast: &[f64], grid: &TauGrid) -> Result<f64> {
    let q = forecast.len();
    if q != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: q,
        });
    }
    if q < 2 {
        return Err(Error::Domain(
            "log score needs at least two quantiles".into(),
        ));
    }
    if forecast.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("forecast quantiles must be sorted".into()));
    }
    let bin = if y < forecast[0] {
        0
    } else if y >= forecast[q - 1] {
        q - 2
    } else {
        (0..q - 1)
            .find(|&b| forecast[b] <= y && y < forecast[b + 1])
            .unwrap_or(q - 2)
    };
    Ok(bin_density(forecast, grid.taus(), bin).ln())
}

fn bin_density(forecast: &[f64], taus: &[f64], b: usize) -> f64 {
    let width = forecast[b + 1] - forecast[b];
    let d = if width > 0.0 {
        (taus[b + 1] - taus[b]) / width
    } else {
        0.0
    };
    d.max(DENSITY_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmiseRow {
    pub dgp: String,
    pub estimator: String,
    pub t: usize,
    pub delta_tau: f64,
    pub tau: f64,
    pub rmise: f64,
    pub std_err: f64,
    pub n_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub dgp: String,
    pub estimator: String,
    pub t: usize,
    pub delta_tau: f64,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub n_reps: usize,
}

/// One estimator's forecast scores: qwCRPS under each weighting for raw and
/// rearranged forecasts, and the mean log score of the rearranged ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub estimator: String,
    pub horizon: usize,
    pub crps: f64,
    pub center: f64,
    pub left: f64,
    pub crps_sorted: f64,
    pub center_sorted: f64,
    pub left_sorted: f64,
    pub log_score: Option<f64>,
    pub n_windows: usize,
    pub n_failed: usize,
}

/// Writes serialisable rows as CSV with a header.
pub fn write_csv<W: Write, R: Serialize>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
