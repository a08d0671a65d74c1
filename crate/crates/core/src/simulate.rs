//! Monte Carlo engine: location-scale designs, analytic quantiles and
//! replication runner.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{fit, fitted_quantiles, EstimatorConfig, EstimatorKind, GammaSolution};
use crate::grid::TauGrid;
use crate::metrics::{rmise, tpr_tnr, RmiseRow, SelectionRow, SelectionTruth, DETECTION_TOL};
use crate::scaling::{scale_to_unit, AffineMap};
use crate::selection::{grid_search, CvPlan, HyperGrid};

/// Fresh evaluation points per replication for RMISE.
pub const DEFAULT_EVAL_POINTS: usize = 1000;

/// Analytic differences below this are treated as zero.
pub const TRUTH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DgpName {
    Y1,
    Y2,
    Y3,
    Y4,
}

impl DgpName {
    pub const ALL: [DgpName; 4] = [DgpName::Y1, DgpName::Y2, DgpName::Y3, DgpName::Y4];
}

impl fmt::Display for DgpName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DgpName::Y1 => "y1",
            DgpName::Y2 => "y2",
            DgpName::Y3 => "y3",
            DgpName::Y4 => "y4",
        };
        f.write_str(s)
    }
}

impl FromStr for DgpName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "y1" => Ok(DgpName::Y1),
            "y2" => Ok(DgpName::Y2),
            "y3" => Ok(DgpName::Y3),
            "y4" => Ok(DgpName::Y4),
            _ => Err(Error::Config(format!(
                "unknown design '{s}', expected y1..y4"
            ))),
        }
    }
}

/// `y = β₀ + βᵀx + (θ₀ + (ϑ ⊙ θ)ᵀx) ε` with `x ~ U(0,1)^K`, `ε ~ N(0,1)`.
///
/// `gated[j]` switches variable `j`'s scale term on only when
/// `|ε| ≥ Φ⁻¹(0.9)`; ungated variables always carry it.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub name: DgpName,
    pub beta0: f64,
    pub theta0: f64,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub gated: Vec<bool>,
}

fn normal() -> Normal {
    Normal::standard()
}

fn tail_threshold() -> f64 {
    normal().inverse_cdf(0.9)
}

fn padded(head: &[f64], k: usize) -> Vec<f64> {
    let mut v = head.to_vec();
    v.resize(k, 0.0);
    v
}

impl DgpSpec {
    pub fn new(name: DgpName) -> Self {
        let (beta, theta, gated) = match name {
            DgpName::Y1 => (vec![1.0; 4], vec![0.1; 4], vec![false; 4]),
            DgpName::Y2 => (
                padded(&[1.0; 4], 10),
                padded(&[0.1; 4], 10),
                vec![false; 10],
            ),
            DgpName::Y3 => (vec![1.0; 7], padded(&[1.0; 3], 7), vec![false; 7]),
            DgpName::Y4 => {
                let gated = (0..10).map(|j| (4..8).contains(&j)).collect();
                (padded(&[1.0; 4], 10), padded(&[0.1; 8], 10), gated)
            }
        };
        DgpSpec {
            name,
            beta0: 1.0,
            theta0: 1.0,
            beta,
            theta,
            gated,
        }
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }

    fn effective_theta(&self, j: usize, in_tail: bool) -> f64 {
        if self.gated[j] && !in_tail {
            0.0
        } else {
            self.theta[j]
        }
    }

    fn scale(&self, x: ArrayView1<f64>, in_tail: bool) -> f64 {
        self.theta0
            + x.iter()
                .enumerate()
                .map(|(j, xj)| self.effective_theta(j, in_tail) * xj)
                .sum::<f64>()
    }

    fn location(&self, x: ArrayView1<f64>) -> f64 {
        self.beta0 + self.beta.iter().zip(x).map(|(b, xj)| b * xj).sum::<f64>()
    }

    /// Response for given covariates and noise.
    pub fn response(&self, x: ArrayView2<f64>, eps: ArrayView1<f64>) -> Array1<f64> {
        let z = tail_threshold();
        x.rows()
            .into_iter()
            .zip(eps)
            .map(|(row, &e)| self.location(row) + self.scale(row, e.abs() >= z) * e)
            .collect()
    }

    /// Slope of the true `tau` quantile in variable `j`.
    pub fn slope(&self, j: usize, tau: f64) -> f64 {
        self.beta[j] + self.effective_theta(j, tail_level(tau)) * normal().inverse_cdf(tau)
    }
}

fn tail_level(tau: f64) -> bool {
    tau <= 0.1 || tau >= 0.9
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tau must lie in (0, 1), got {tau}")))
    }
}

/// `g_τ(x) = β₀ + βᵀx + σ_τ(x) Φ⁻¹(τ)`.
pub fn true_quantile(dgp: &DgpSpec, x: ArrayView1<f64>, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if x.len() != dgp.k() {
        return Err(Error::DimensionMismatch {
            expected: dgp.k(),
            found: x.len(),
        });
    }
    Ok(dgp.location(x) + dgp.scale(x, tail_level(tau)) * normal().inverse_cdf(tau))
}

/// True quantiles at every row of `x` (`n × Q`).
pub fn true_quantiles(dgp: &DgpSpec, x: ArrayView2<f64>, grid: &TauGrid) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((x.nrows(), grid.len()));
    for (t, row) in x.rows().into_iter().enumerate() {
        for (q, &tau) in grid.taus().iter().enumerate() {
            out[[t, q]] = true_quantile(dgp, row, tau)?;
        }
    }
    Ok(out)
}

pub fn selection_truth(dgp: &DgpSpec, grid: &TauGrid) -> SelectionTruth {
    let taus = grid.taus();
    let qd = taus.len().saturating_sub(1);
    let active = Array2::from_shape_fn((dgp.k(), qd), |(j, q)| {
        (dgp.slope(j, taus[q + 1]) - dgp.slope(j, taus[q])).abs() > TRUTH_TOL
    });
    SelectionTruth { active }
}

#[derive(Debug, Clone)]
pub struct Replication {
    pub seed: u64,
    pub data: Dataset,
    /// Fresh covariate draws for evaluating fitted quantiles.
    pub eval_x: Array2<f64>,
}

fn uniform_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, k), || rng.random::<f64>())
}

pub fn draw(dgp: &DgpSpec, t: usize, seed: u64) -> Replication {
    draw_with(dgp, t, seed, DEFAULT_EVAL_POINTS)
}

pub fn draw_with(dgp: &DgpSpec, t: usize, seed: u64, n_eval: usize) -> Replication {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = uniform_matrix(&mut rng, t, dgp.k());
    let eps: Array1<f64> = (0..t)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let y = dgp.response(x.view(), eps.view());
    let eval_x = uniform_matrix(&mut rng, n_eval, dgp.k());
    let names = (1..=dgp.k()).map(|j| format!("x{j}")).collect();
    Replication {
        seed,
        data: Dataset::with_names(x, y, names).expect("simulated data are finite"),
        eval_x,
    }
}

/// Seed of replication `rep` under master seed `seed`.
pub fn replication_seed(seed: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64 + 1);
    rng.random()
}

/// An estimator in an experiment: fixed, or tuned by cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    Fixed(EstimatorConfig),
    Tuned {
        kind: EstimatorKind,
        hypergrid: HyperGrid,
    },
}

impl EstimatorSpec {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorSpec::Fixed(c) => c.kind,
            EstimatorSpec::Tuned { kind, .. } => *kind,
        }
    }

    pub fn label(&self) -> String {
        match self {
            EstimatorSpec::Fixed(c) if c.kind.has_hyperparameter() => c.to_string(),
            _ => self.kind().label().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dgp: DgpSpec,
    pub t: usize,
    pub grid: TauGrid,
    pub estimators: Vec<EstimatorSpec>,
    pub n_reps: usize,
    pub seed: u64,
    /// Folds for shuffled k-fold selection of tuned estimators.
    pub folds: usize,
    pub n_eval: usize,
    pub detection_tol: f64,
}

impl ExperimentConfig {
    pub fn new(dgp: DgpSpec, t: usize, grid: TauGrid, estimators: Vec<EstimatorSpec>) -> Self {
        ExperimentConfig {
            dgp,
            t,
            grid,
            estimators,
            n_reps: 500,
            seed: 0,
            folds: 10,
            n_eval: DEFAULT_EVAL_POINTS,
            detection_tol: DETECTION_TOL,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators to run".into()));
        }
        if self.n_reps < 2 {
            return Err(Error::Config(format!(
                "need at least 2 replications, got {}",
                self.n_reps
            )));
        }
        if self.n_eval == 0 {
            return Err(Error::Config("need at least one evaluation point".into()));
        }
        if self.t < 2 {
            return Err(Error::Config(format!(
                "sample size {} is too small",
                self.t
            )));
        }
        for e in &self.estimators {
            if let EstimatorSpec::Fixed(c) = e {
                c.validate()?;
            } else if !e.kind().has_hyperparameter() {
                return Err(Error::Config(format!(
                    "{} has no hyperparameter to tune",
                    e.kind()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub estimator: String,
    pub n_failed: usize,
    pub n_reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRow {
    pub replication: usize,
    pub estimator: String,
    pub hyperparameter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rmise: Vec<RmiseRow>,
    pub selection: Vec<SelectionRow>,
    pub failures: Vec<FailureRow>,
    pub choices: Vec<ChoiceRow>,
}

struct EstimatorOutcome {
    fitted: Array2<f64>,
    gamma: GammaSolution,
    chosen: Option<f64>,
}

struct ReplicationOutcome {
    truth: Array2<f64>,
    estimators: Vec<Result<EstimatorOutcome>>,
}

fn run_estimator(
    spec: &EstimatorSpec,
    rep: &Replication,
    scaled: &Dataset,
    map: &AffineMap,
    cfg: &ExperimentConfig,
    cv_seed: u64,
) -> Result<EstimatorOutcome> {
    let (est, chosen) = match spec {
        EstimatorSpec::Fixed(c) => (*c, None),
        EstimatorSpec::Tuned { kind, hypergrid } => {
            let plan = CvPlan::k_fold(cfg.folds, cv_seed);
            let s = grid_search(scaled, &cfg.grid, *kind, hypergrid, &plan)?;
            (s.best_config(), Some(s.best))
        }
    };
    let f = fit(scaled, &cfg.grid, &est)?;
    let gamma = f.gamma.clone();
    let fitted = fitted_quantiles(&f.back_transform(map)?, rep.eval_x.view())?;
    Ok(EstimatorOutcome {
        fitted,
        gamma,
        chosen,
    })
}

fn run_replication(cfg: &ExperimentConfig, r: usize) -> Result<ReplicationOutcome> {
    let seed = replication_seed(cfg.seed, r);
    let rep = draw_with(&cfg.dgp, cfg.t, seed, cfg.n_eval);
    let truth = true_quantiles(&cfg.dgp, rep.eval_x.view(), &cfg.grid)?;
    let (scaled, map) = scale_to_unit(&rep.data)?;
    let cv_seed = seed.rotate_left(17) ^ 0x5DEE_CE66;
    let estimators = cfg
        .estimators
        .iter()
        .map(|spec| run_estimator(spec, &rep, &scaled, &map, cfg, cv_seed))
        .collect();
    Ok(ReplicationOutcome { truth, estimators })
}

fn grid_spacing(grid: &TauGrid) -> f64 {
    match grid.taus() {
        [a, b, ..] => ((b - a) * 1e9).round() / 1e9,
        _ => 0.0,
    }
}

/// Runs `n_reps` replications and reduces them, in replication order, to
/// RMISE and selection-rate tables. Failed fits are excluded per estimator
/// and counted.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let per_rep: Vec<Result<ReplicationOutcome>> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|r| run_replication(cfg, r))
        .collect();

    let truth = selection_truth(&cfg.dgp, &cfg.grid);
    let dgp = cfg.dgp.name.to_string();
    let delta_tau = grid_spacing(&cfg.grid);
    let mut out = ExperimentOutput {
        rmise: vec![],
        selection: vec![],
        failures: vec![],
        choices: vec![],
    };
    for (e, spec) in cfg.estimators.iter().enumerate() {
        let label = spec.label();
        let (mut est, mut tru, mut gammas) = (vec![], vec![], vec![]);
        let mut failed = 0;
        for (r, rep) in per_rep.iter().enumerate() {
            let outcome = rep
                .as_ref()
                .ok()
                .and_then(|rep| Some((&rep.truth, rep.estimators[e].as_ref().ok()?)));
            match outcome {
                Some((truth, o)) => {
                    est.push(o.fitted.clone());
                    tru.push(truth.clone());
                    gammas.push(o.gamma.clone());
                    if let Some(v) = o.chosen {
                        out.choices.push(ChoiceRow {
                            replication: r,
                            estimator: label.clone(),
                            hyperparameter: v,
                        });
                    }
                }
                None => failed += 1,
            }
        }
        out.failures.push(FailureRow {
            estimator: label.clone(),
            n_failed: failed,
            n_reps: cfg.n_reps,
        });
        let n_ok = est.len();
        if n_ok >= 2 {
            for (q, m) in rmise(&est, &tru)?.into_iter().enumerate() {
                out.rmise.push(RmiseRow {
                    dgp: dgp.clone(),
                    estimator: label.clone(),
                    t: cfg.t,
                    delta_tau,
                    tau: cfg.grid.taus()[q],
                    rmise: m.mean,
                    std_err: m.std_err,
                    n_reps: n_ok,
                });
            }
        }
        if n_ok > 0 {
            let rates = tpr_tnr(&gammas, &truth, cfg.detection_tol)?;
            out.selection.push(SelectionRow {
                dgp: dgp.clone(),
                estimator: label,
                t: cfg.t,
                delta_tau,
                tpr: rates.tpr,
                tnr: rates.tnr,
                n_reps: n_ok,
            });
        }
    }
    Ok(out)
}
