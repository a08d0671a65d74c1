//! Joint quantile regression estimators written as linear programs over
//! quantile differences.
//!
//! Coefficients of quantile `q` are cumulative sums of differences,
//! `β_q = Σ_{r≤q} (γ⁺_r − γ⁻_r)`, with the intercept kept apart from the
//! slopes as coordinate `j = 0`. Each estimator is the same tick-loss LP
//! with different extra rows or penalties:
//!
//! | kind  | addition                                                  |
//! |-------|-----------------------------------------------------------|
//! | QR    | none                                                      |
//! | GNCQR | one adaptive non-crossing row per `q ≥ 2`                 |
//! | BRW   | GNCQR with `α = 1`                                        |
//! | FLQR  | `λ Σ_{q≥2, j≥1} (γ⁺ + γ⁻)` added to the objective         |
//! | CQR   | slope differences fixed at zero, intercepts free          |

mod export;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::TauGrid;
use crate::loss::tick;
use crate::lp::{self, LpProblem, LpStatus, SolveOptions, SparseRow};
use crate::scaling::{inverse_transform_coefficients, AffineMap, Coefficients};

pub use export::FitRecord;

/// Adjacent fitted quantiles that decrease by more than this count as a
/// crossing.
pub const CROSSING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EstimatorKind {
    Qr,
    Brw,
    Gncqr,
    Flqr,
    Cqr,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Qr,
        EstimatorKind::Brw,
        EstimatorKind::Gncqr,
        EstimatorKind::Flqr,
        EstimatorKind::Cqr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Qr => "QR",
            EstimatorKind::Brw => "BRW",
            EstimatorKind::Gncqr => "GNCQR",
            EstimatorKind::Flqr => "FLQR",
            EstimatorKind::Cqr => "CQR",
        }
    }

    pub fn has_hyperparameter(self) -> bool {
        matches!(self, EstimatorKind::Gncqr | EstimatorKind::Flqr)
    }

    /// Estimators whose constraint uses column ranges.
    fn needs_range(self) -> bool {
        matches!(self, EstimatorKind::Brw | EstimatorKind::Gncqr)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown estimator `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl EstimatorConfig {
    pub fn qr() -> Self {
        Self::plain(EstimatorKind::Qr)
    }

    pub fn brw() -> Self {
        Self::plain(EstimatorKind::Brw)
    }

    pub fn cqr() -> Self {
        Self::plain(EstimatorKind::Cqr)
    }

    pub fn gncqr(alpha: f64) -> Self {
        EstimatorConfig {
            kind: EstimatorKind::Gncqr,
            alpha: Some(alpha),
            lambda: None,
        }
    }

    pub fn flqr(lambda: f64) -> Self {
        EstimatorConfig {
            kind: EstimatorKind::Flqr,
            alpha: None,
            lambda: Some(lambda),
        }
    }

    fn plain(kind: EstimatorKind) -> Self {
        EstimatorConfig {
            kind,
            alpha: None,
            lambda: None,
        }
    }

    /// Config of `kind` with its hyperparameter set to `value`; `value` is
    /// ignored for kinds without one.
    pub fn with_hyperparameter(kind: EstimatorKind, value: f64) -> Self {
        match kind {
            EstimatorKind::Gncqr => Self::gncqr(value),
            EstimatorKind::Flqr => Self::flqr(value),
            k => Self::plain(k),
        }
    }

    pub fn hyperparameter(&self) -> Option<f64> {
        self.alpha.or(self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: Option<f64>, wanted: bool| -> Result<()> {
            match (v, wanted) {
                (Some(x), true) if x.is_finite() && x >= 0.0 => Ok(()),
                (Some(x), true) => Err(Error::Config(format!(
                    "{name} must be finite and non-negative, got {x}"
                ))),
                (None, true) => Err(Error::Config(format!("{} requires {name}", self.kind))),
                (Some(_), false) => {
                    Err(Error::Config(format!("{} does not take {name}", self.kind)))
                }
                (None, false) => Ok(()),
            }
        };
        check("alpha", self.alpha, self.kind == EstimatorKind::Gncqr)?;
        check("lambda", self.lambda, self.kind == EstimatorKind::Flqr)
    }

    /// The constraint scale `α` if the estimator has a non-crossing row.
    fn constraint_alpha(&self) -> Option<f64> {
        match self.kind {
            EstimatorKind::Brw => Some(1.0),
            EstimatorKind::Gncqr => self.alpha,
            _ => None,
        }
    }
}

impl fmt::Display for EstimatorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.alpha, self.lambda) {
            (Some(a), _) => write!(f, "{}(alpha={a})", self.kind),
            (_, Some(l)) => write!(f, "{}(lambda={l})", self.kind),
            _ => write!(f, "{}", self.kind),
        }
    }
}

/// Split quantile differences, `(K + 1) × Q`, row 0 being the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSolution {
    pub plus: Array2<f64>,
    pub minus: Array2<f64>,
}

impl GammaSolution {
    pub fn new(plus: Array2<f64>, minus: Array2<f64>) -> Result<Self> {
        if plus.dim() != minus.dim() {
            return Err(Error::DimensionMismatch {
                expected: plus.len(),
                found: minus.len(),
            });
        }
        Ok(GammaSolution { plus, minus })
    }

    /// Net differences `γ⁺ − γ⁻`.
    pub fn net(&self) -> Array2<f64> {
        &self.plus - &self.minus
    }

    /// Keeps only one non-zero part per entry.
    pub fn canonicalize(&self) -> GammaSolution {
        let g = self.net();
        GammaSolution {
            plus: g.mapv(|v| v.max(0.0)),
            minus: g.mapv(|v| (-v).max(0.0)),
        }
    }

    /// Cumulative sums over quantiles: `(K + 1) × Q` levels, row 0 the
    /// intercepts.
    pub fn levels(&self) -> Array2<f64> {
        let mut out = self.net();
        for mut row in out.axis_iter_mut(Axis(0)) {
            let mut acc = 0.0;
            for v in row.iter_mut() {
                acc += *v;
                *v = acc;
            }
        }
        out
    }

    /// Inverse of [`levels`](Self::levels).
    pub fn from_levels(levels: &Array2<f64>) -> GammaSolution {
        let mut g = levels.clone();
        let q = levels.ncols();
        for r in (1..q).rev() {
            let prev = levels.column(r - 1).to_owned();
            let mut col = g.column_mut(r);
            col -= &prev;
        }
        GammaSolution {
            plus: g.mapv(|v| v.max(0.0)),
            minus: g.mapv(|v| (-v).max(0.0)),
        }
    }
}

/// Coefficients of the `(ds, alpha)` non-crossing row in the form
/// `Σ_j plus_j γ⁺_j − Σ_j minus_j γ⁻_j ≥ 0`, index 0 being the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCoefficients {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

pub fn constraint_coefficients(ds: &Dataset, alpha: f64) -> Result<ConstraintCoefficients> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Domain(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    ds.require_non_constant()?;
    let mut plus = vec![1.0];
    let mut minus = vec![1.0];
    for s in ds.column_stats() {
        plus.push(s.mean - alpha * (s.mean - s.min));
        minus.push(s.mean + alpha * (s.max - s.mean));
    }
    Ok(ConstraintCoefficients { plus, minus })
}

/// Variable layout of the joint LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpLayout {
    pub n_obs: usize,
    pub n_covariates: usize,
    pub n_quantiles: usize,
}

impl LpLayout {
    pub fn for_data(ds: &Dataset, grid: &TauGrid) -> Self {
        LpLayout {
            n_obs: ds.n_obs(),
            n_covariates: ds.n_covariates(),
            n_quantiles: grid.len(),
        }
    }

    pub fn n_gamma(&self) -> usize {
        2 * (self.n_covariates + 1) * self.n_quantiles
    }

    pub fn n_vars(&self) -> usize {
        self.n_gamma() + 2 * self.n_obs * self.n_quantiles
    }

    /// `γ⁺_{j,q}` for `negative = false`, `γ⁻_{j,q}` otherwise; `q` and `j`
    /// are zero-based.
    pub fn gamma(&self, q: usize, j: usize, negative: bool) -> usize {
        2 * (q * (self.n_covariates + 1) + j) + negative as usize
    }

    /// `u⁺_{t,q}` or `u⁻_{t,q}`.
    pub fn residual(&self, t: usize, q: usize, negative: bool) -> usize {
        self.n_gamma() + 2 * (q * self.n_obs + t) + negative as usize
    }
}

/// The non-crossing row for quantile index `q` (zero-based, `q ≥ 1`) in
/// `A_ub z ≤ 0` form over the joint LP variables.
pub fn build_constraint_row(
    ds: &Dataset,
    alpha: f64,
    q: usize,
    layout: &LpLayout,
) -> Result<SparseRow> {
    if q == 0 || q >= layout.n_quantiles {
        return Err(Error::Domain(format!(
            "constraint index {q} outside 1..{}",
            layout.n_quantiles
        )));
    }
    let c = constraint_coefficients(ds, alpha)?;
    let mut row = Vec::with_capacity(2 * c.plus.len());
    for j in 0..c.plus.len() {
        row.push((layout.gamma(q, j, false), -c.plus[j]));
        row.push((layout.gamma(q, j, true), c.minus[j]));
    }
    Ok(SparseRow::new(row))
}

/// Builds the LP of `cfg` for `ds` at `grid`.
pub fn build_problem(ds: &Dataset, grid: &TauGrid, cfg: &EstimatorConfig) -> Result<LpProblem> {
    cfg.validate()?;
    let layout = LpLayout::for_data(ds, grid);
    let (t_n, k, q_n) = (layout.n_obs, layout.n_covariates, layout.n_quantiles);
    let taus = grid.taus();

    let mut objective = vec![0.0; layout.n_vars()];
    for (q, &tau) in taus.iter().enumerate() {
        for t in 0..t_n {
            objective[layout.residual(t, q, false)] = tau;
            objective[layout.residual(t, q, true)] = 1.0 - tau;
        }
    }
    if let Some(lambda) = cfg.lambda {
        for q in 1..q_n {
            for j in 1..=k {
                objective[layout.gamma(q, j, false)] = lambda;
                objective[layout.gamma(q, j, true)] = lambda;
            }
        }
    }

    // Columns a quantile's equality row may use: CQR drops slope differences.
    let active = |r: usize, j: usize| !(cfg.kind == EstimatorKind::Cqr && r > 0 && j > 0);

    let mut p = LpProblem::new(objective);
    let x = ds.x();
    for q in 0..q_n {
        for t in 0..t_n {
            let mut row = Vec::with_capacity(2 * (k + 1) * (q + 1) + 2);
            for r in 0..=q {
                for j in 0..=k {
                    if !active(r, j) {
                        continue;
                    }
                    let v = if j == 0 { 1.0 } else { x[[t, j - 1]] };
                    row.push((layout.gamma(r, j, false), v));
                    row.push((layout.gamma(r, j, true), -v));
                }
            }
            row.push((layout.residual(t, q, false), 1.0));
            row.push((layout.residual(t, q, true), -1.0));
            p.add_eq(SparseRow::new(row), ds.y()[t]);
        }
    }
    if let Some(alpha) = cfg.constraint_alpha() {
        for q in 1..q_n {
            p.add_ub(build_constraint_row(ds, alpha, q, &layout)?, 0.0);
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFit {
    pub taus: Vec<f64>,
    pub names: Vec<String>,
    /// Intercepts, one per quantile.
    pub xi: Vec<f64>,
    /// `K × Q` slopes.
    pub beta: Array2<f64>,
    pub gamma: GammaSolution,
    /// Total in-sample tick loss over observations and quantiles.
    pub objective: f64,
    /// LP objective, which adds any penalty to `objective`.
    pub lp_objective: f64,
    pub estimator: EstimatorConfig,
    /// Share of training observations with at least one crossing.
    pub crossing_rate: f64,
    pub iterations: usize,
    pub diagnostics: Vec<String>,
}

impl QuantileFit {
    pub fn n_quantiles(&self) -> usize {
        self.taus.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.beta.nrows()
    }

    pub fn coefficients(&self, q: usize) -> Coefficients {
        Coefficients {
            intercept: self.xi[q],
            slopes: self.beta.column(q).to_vec(),
        }
    }

    /// Re-expresses a fit obtained on `map`-transformed covariates in the
    /// original units.
    pub fn back_transform(&self, map: &AffineMap) -> Result<QuantileFit> {
        let k = self.n_covariates();
        let mut levels = Array2::zeros((k + 1, self.n_quantiles()));
        for q in 0..self.n_quantiles() {
            let c = inverse_transform_coefficients(&self.coefficients(q), map)?;
            levels[[0, q]] = c.intercept;
            for j in 0..k {
                levels[[j + 1, q]] = c.slopes[j];
            }
        }
        let mut out = self.clone();
        out.gamma = GammaSolution::from_levels(&levels);
        out.xi = levels.row(0).to_vec();
        out.beta = levels.slice(ndarray::s![1.., ..]).to_owned();
        Ok(out)
    }
}

/// Fits `cfg` on `ds` at the quantiles of `grid`.
pub fn fit(ds: &Dataset, grid: &TauGrid, cfg: &EstimatorConfig) -> Result<QuantileFit> {
    fit_with(ds, grid, cfg, SolveOptions::default())
}

pub fn fit_with(
    ds: &Dataset,
    grid: &TauGrid,
    cfg: &EstimatorConfig,
    options: SolveOptions,
) -> Result<QuantileFit> {
    cfg.validate()?;
    if cfg.kind.needs_range() && grid.len() > 1 {
        ds.require_non_constant()?;
    }
    let layout = LpLayout::for_data(ds, grid);
    let (sol, iterations) = if cfg.kind == EstimatorKind::Qr {
        solve_separately(ds, grid, options)?
    } else {
        let p = build_problem(ds, grid, cfg)?;
        let sol = lp::solve(&p, options)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Solver {
                estimator: cfg.to_string(),
                status: sol.status,
            });
        }
        let it = sol.iterations;
        (sol.z, it)
    };

    let (k, q_n) = (layout.n_covariates, layout.n_quantiles);
    let mut plus = Array2::zeros((k + 1, q_n));
    let mut minus = Array2::zeros((k + 1, q_n));
    for q in 0..q_n {
        for j in 0..=k {
            plus[[j, q]] = sol[layout.gamma(q, j, false)];
            minus[[j, q]] = sol[layout.gamma(q, j, true)];
        }
    }
    let gamma = GammaSolution { plus, minus }.canonicalize();
    let levels = gamma.levels();
    let xi = levels.row(0).to_vec();
    let beta = levels.slice(ndarray::s![1.., ..]).to_owned();

    let mut fit = QuantileFit {
        taus: grid.taus().to_vec(),
        names: ds.names().to_vec(),
        xi,
        beta,
        gamma,
        objective: 0.0,
        lp_objective: 0.0,
        estimator: *cfg,
        crossing_rate: 0.0,
        iterations,
        diagnostics: ds.diagnostics(),
    };
    let fitted = fitted_quantiles(&fit, ds.x().view())?;
    fit.objective = total_tick_loss(ds.y().view(), &fitted, grid.taus());
    fit.lp_objective = fit.objective
        + cfg.lambda.map_or(0.0, |l| {
            let net = fit.gamma.net();
            l * net
                .slice(ndarray::s![1.., 1..])
                .iter()
                .map(|v| v.abs())
                .sum::<f64>()
        });
    fit.crossing_rate = crossing_rate(&fitted);
    Ok(fit)
}

/// QR has no coupling between quantiles, so each block is solved alone.
fn solve_separately(
    ds: &Dataset,
    grid: &TauGrid,
    options: SolveOptions,
) -> Result<(Vec<f64>, usize)> {
    let layout = LpLayout::for_data(ds, grid);
    let mut z = vec![0.0; layout.n_vars()];
    let mut iterations = 0;
    let mut prev = vec![0.0; layout.n_covariates + 1];
    for (q, &tau) in grid.taus().iter().enumerate() {
        let single = TauGrid::new(vec![tau])?;
        let p = build_problem(ds, &single, &EstimatorConfig::qr())?;
        let sol = lp::solve(&p, options)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Solver {
                estimator: EstimatorConfig::qr().to_string(),
                status: sol.status,
            });
        }
        iterations += sol.iterations;
        let one = LpLayout::for_data(ds, &single);
        for (j, prev_j) in prev.iter_mut().enumerate() {
            let level = sol.z[one.gamma(0, j, false)] - sol.z[one.gamma(0, j, true)];
            let diff = level - *prev_j;
            *prev_j = level;
            z[layout.gamma(q, j, false)] = diff.max(0.0);
            z[layout.gamma(q, j, true)] = (-diff).max(0.0);
        }
    }
    Ok((z, iterations))
}

/// `T × Q` matrix of `ξ_q + x_tᵀ β_q`.
pub fn fitted_quantiles(fit: &QuantileFit, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.ncols() != fit.n_covariates() {
        return Err(Error::DimensionMismatch {
            expected: fit.n_covariates(),
            found: x.ncols(),
        });
    }
    let mut out = x.dot(&fit.beta);
    for mut row in out.axis_iter_mut(Axis(0)) {
        for (v, xi) in row.iter_mut().zip(&fit.xi) {
            *v += xi;
        }
    }
    Ok(out)
}

/// Sorts each row ascending.
pub fn sort_quantiles(fitted: &Array2<f64>) -> Array2<f64> {
    let mut out = fitted.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let mut v = row.to_vec();
        v.sort_by(f64::total_cmp);
        row.assign(&ndarray::Array1::from(v));
    }
    out
}

/// Share of rows with an adjacent decrease larger than [`CROSSING_TOL`].
pub fn crossing_rate(fitted: &Array2<f64>) -> f64 {
    if fitted.nrows() == 0 {
        return 0.0;
    }
    let crossed = fitted
        .axis_iter(Axis(0))
        .filter(|row| {
            row.windows(2)
                .into_iter()
                .any(|w| w[1] < w[0] - CROSSING_TOL)
        })
        .count();
    crossed as f64 / fitted.nrows() as f64
}

/// `Σ_t Σ_q ρ_{τ_q}(y_t − fitted_{t,q})`.
pub fn total_tick_loss(y: ArrayView1<f64>, fitted: &Array2<f64>, taus: &[f64]) -> f64 {
    let mut total = 0.0;
    for (t, row) in fitted.axis_iter(Axis(0)).enumerate() {
        for (v, &tau) in row.iter().zip(taus) {
            total += tick(y[t] - v, tau);
        }
    }
    total
}

#[cfg(test)]
mod tests;
