//! Hyperparameter grids, blocked cross-validation and grid search.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{fit, fitted_quantiles, total_tick_loss, EstimatorConfig, EstimatorKind};
use crate::grid::TauGrid;

/// Sorted, de-duplicated, non-negative candidate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    values: Vec<f64>,
}

impl HyperGrid {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("hyperparameter grid is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Config(format!(
                "hyperparameter {v} must be finite and non-negative"
            )));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(HyperGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `n_linear` points `0, h, 2h, …` on `[0, linear_hi)` followed by
/// `n_log` points `10^e` with `e` equispaced on `[0, log_exp_hi]`.
pub fn make_grid(
    n_linear: usize,
    linear_hi: f64,
    n_log: usize,
    log_exp_hi: f64,
) -> Result<HyperGrid> {
    if n_linear == 0 || n_log == 0 {
        return Err(Error::Config("grid point counts must be at least 1".into()));
    }
    if !(linear_hi.is_finite() && linear_hi > 0.0) || !(log_exp_hi.is_finite() && log_exp_hi >= 0.0)
    {
        return Err(Error::Config(format!(
            "invalid grid ranges [0, {linear_hi}) and [0, {log_exp_hi}]"
        )));
    }
    let mut values: Vec<f64> = (0..n_linear)
        .map(|i| i as f64 * linear_hi / n_linear as f64)
        .collect();
    for k in 0..n_log {
        let e = if n_log == 1 {
            0.0
        } else {
            k as f64 * log_exp_hi / (n_log - 1) as f64
        };
        let v = if e.fract() == 0.0 {
            10f64.powi(e as i32)
        } else {
            10f64.powf(e)
        };
        values.push(v);
    }
    HyperGrid::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvOrdering {
    /// Keep the observation order (time series).
    AsIs,
    /// Shuffle rows once with the seed before blocking (cross sections).
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub folds: usize,
    /// Observations dropped from training on each side of a validation block.
    pub gap: usize,
    pub ordering: CvOrdering,
}

impl CvPlan {
    pub fn k_fold(folds: usize, seed: u64) -> Self {
        CvPlan {
            folds,
            gap: 0,
            ordering: CvOrdering::Shuffled { seed },
        }
    }

    pub fn hv_block(folds: usize, gap: usize) -> Self {
        CvPlan {
            folds,
            gap,
            ordering: CvOrdering::AsIs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validate: Vec<usize>,
}

/// Splits `0..t` into `plan.folds` contiguous validation blocks (the first
/// `t % folds` blocks one longer), each trained on everything farther than
/// `plan.gap` positions from the block.
pub fn cv_folds(t: usize, plan: &CvPlan) -> Result<Vec<Fold>> {
    let k = plan.folds;
    if k < 2 || k > t {
        return Err(Error::Config(format!("fold count {k} must lie in 2..={t}")));
    }
    let mut order: Vec<usize> = (0..t).collect();
    if let CvOrdering::Shuffled { seed } = plan.ordering {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let (base, extra) = (t / k, t % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let end = start + base + usize::from(f < extra);
        let lo = start.saturating_sub(plan.gap);
        let hi = (end + plan.gap).min(t);
        let train: Vec<usize> = (0..lo).chain(hi..t).map(|p| order[p]).collect();
        if train.is_empty() {
            return Err(Error::EmptyTrainingSet { fold: f + 1 });
        }
        let validate = (start..end).map(|p| order[p]).collect();
        folds.push(Fold { train, validate });
        start = end;
    }
    Ok(folds)
}

/// Scores of one hyperparameter value. Losses are mean tick losses over
/// observations and quantiles; `None` marks a failed fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub value: f64,
    pub in_sample_loss: Option<f64>,
    pub oos_loss: Option<f64>,
    pub n_failed_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub kind: EstimatorKind,
    pub best: f64,
    pub profile: Vec<CandidateScore>,
}

impl SearchResult {
    pub fn best_config(&self) -> EstimatorConfig {
        EstimatorConfig::with_hyperparameter(self.kind, self.best)
    }

    pub fn write_profile_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["candidate", "in_sample_loss", "oos_loss", "n_failed_folds"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.profile {
            w.write_record([
                c.value.to_string(),
                opt(c.in_sample_loss),
                opt(c.oos_loss),
                c.n_failed_folds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean validation tick loss of `cfg` over the folds of `plan`, or the
/// number of failed folds.
pub fn cv_loss(
    ds: &Dataset,
    grid: &TauGrid,
    cfg: &EstimatorConfig,
    plan: &CvPlan,
) -> Result<std::result::Result<f64, usize>> {
    let folds = cv_folds(ds.n_obs(), plan)?;
    let parts: Vec<Option<(f64, usize)>> = folds
        .par_iter()
        .map(|f| fold_loss(ds, grid, cfg, f))
        .collect();
    Ok(reduce_folds(&parts, grid.len()))
}

fn fold_loss(
    ds: &Dataset,
    grid: &TauGrid,
    cfg: &EstimatorConfig,
    fold: &Fold,
) -> Option<(f64, usize)> {
    let train = ds.select_rows(&fold.train).ok()?;
    let valid = ds.select_rows(&fold.validate).ok()?;
    let f = fit(&train, grid, cfg).ok()?;
    let pred = fitted_quantiles(&f, valid.x().view()).ok()?;
    Some((
        total_tick_loss(valid.y().view(), &pred, grid.taus()),
        valid.n_obs(),
    ))
}

fn reduce_folds(parts: &[Option<(f64, usize)>], q: usize) -> std::result::Result<f64, usize> {
    let failed = parts.iter().filter(|p| p.is_none()).count();
    if failed > 0 {
        return Err(failed);
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for (s, c) in parts.iter().flatten() {
        sum += s;
        n += c;
    }
    Ok(sum / (n * q) as f64)
}

/// Cross-validated grid search over the hyperparameter of `kind`.
///
/// Every candidate is fitted once on the full data (in-sample loss) and once
/// per fold. The candidate with the lowest mean validation loss wins, ties
/// going to the smaller value. Candidates with a failed fit are kept in the
/// profile with missing losses.
pub fn grid_search(
    ds: &Dataset,
    grid: &TauGrid,
    kind: EstimatorKind,
    hgrid: &HyperGrid,
    plan: &CvPlan,
) -> Result<SearchResult> {
    if !kind.has_hyperparameter() {
        return Err(Error::Config(format!(
            "{kind} has no hyperparameter to search"
        )));
    }
    let folds = cv_folds(ds.n_obs(), plan)?;
    let n_folds = folds.len();
    let jobs: Vec<(usize, Option<usize>)> = (0..hgrid.len())
        .flat_map(|c| std::iter::once((c, None)).chain((0..n_folds).map(move |f| (c, Some(f)))))
        .collect();
    let results: Vec<Option<(f64, usize)>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let cfg = EstimatorConfig::with_hyperparameter(kind, hgrid.values()[c]);
            match f {
                None => fit(ds, grid, &cfg)
                    .ok()
                    .map(|fit| (fit.objective, ds.n_obs())),
                Some(f) => fold_loss(ds, grid, &cfg, &folds[f]),
            }
        })
        .collect();

    let q = grid.len();
    let mut profile = Vec::with_capacity(hgrid.len());
    for (c, chunk) in results.chunks(n_folds + 1).enumerate() {
        let in_sample = chunk[0].map(|(s, n)| s / (n * q) as f64);
        let (oos, failed) = match reduce_folds(&chunk[1..], q) {
            Ok(v) => (Some(v), 0),
            Err(k) => (None, k),
        };
        profile.push(CandidateScore {
            value: hgrid.values()[c],
            in_sample_loss: in_sample,
            oos_loss: oos,
            n_failed_folds: failed,
        });
    }
    let mut best: Option<(f64, f64)> = None;
    for c in &profile {
        if let Some(l) = c.oos_loss {
            if best.is_none_or(|(_, bl)| l < bl) {
                best = Some((c.value, l));
            }
        }
    }
    let (best, _) = best.ok_or(Error::AllCandidatesFailed)?;
    Ok(SearchResult {
        kind,
        best,
        profile,
    })
}
