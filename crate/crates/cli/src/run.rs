use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use qrfuse::forecast::write_forecasts_csv;
use qrfuse::metrics::write_csv;
use qrfuse::selection::CvOrdering;
use qrfuse::{
    build_target_pairs, fit, grid_search, make_grid, rolling_forecast, run_experiment,
    scale_to_unit, score_exercise, Dataset, DgpName, DgpSpec, Error, EstimatorConfig,
    EstimatorKind, EstimatorSpec, ExperimentConfig, ForecastExercise, HyperGrid, QuantileFit,
    Result, TauGrid, TimeSeries, TuningPolicy,
};
use serde::Serialize;

use crate::args::{
    CvArgs, DataArgs, FitArgs, ForecastArgs, HyperArgs, OutArgs, Scaling, SimulateArgs, TauArgs,
};

fn tau_grid(a: &TauArgs) -> Result<TauGrid> {
    match (&a.taus, &a.taus_list) {
        (Some(r), _) => TauGrid::parse_range(r),
        (None, Some(l)) => TauGrid::parse_list(l),
        (None, None) => TauGrid::with_spacing(0.1),
    }
    .map_err(|e| Error::Config(e.to_string()))
}

fn hyper_grid(a: &HyperArgs) -> Result<HyperGrid> {
    if let Some(v) = &a.values {
        let values = v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("bad candidate list `{v}`: {e}")))?;
        return HyperGrid::new(values);
    }
    let parts: Vec<&str> = a.grid.split(':').collect();
    let bad = || Error::Config(format!("grid `{}` is not n_linear:hi:n_log:exp_hi", a.grid));
    let [n_lin, hi, n_log, exp_hi] = parts.as_slice() else {
        return Err(bad());
    };
    make_grid(
        n_lin.parse().map_err(|_| bad())?,
        hi.parse().map_err(|_| bad())?,
        n_log.parse().map_err(|_| bad())?,
        exp_hi.parse().map_err(|_| bad())?,
    )
}

fn kind(name: &str) -> Result<EstimatorKind> {
    name.parse()
}

fn config(kind: EstimatorKind, alpha: Option<f64>, lambda: Option<f64>) -> Result<EstimatorConfig> {
    let c = EstimatorConfig {
        kind,
        alpha,
        lambda,
    };
    c.validate()?;
    Ok(c)
}

fn estimator_specs(
    names: &[String],
    alpha: Option<f64>,
    lambda: Option<f64>,
    hyper: &HyperArgs,
) -> Result<Vec<EstimatorSpec>> {
    let mut grid = None;
    names
        .iter()
        .map(|n| {
            let k = kind(n)?;
            let fixed = match k {
                EstimatorKind::Gncqr => alpha.map(EstimatorConfig::gncqr),
                EstimatorKind::Flqr => lambda.map(EstimatorConfig::flqr),
                _ => Some(EstimatorConfig::with_hyperparameter(k, 0.0)),
            };
            Ok(match fixed {
                Some(c) => EstimatorSpec::Fixed(c),
                None => {
                    if grid.is_none() {
                        grid = Some(hyper_grid(hyper)?);
                    }
                    EstimatorSpec::Tuned {
                        kind: k,
                        hypergrid: grid.clone().unwrap(),
                    }
                }
            })
        })
        .collect()
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::Config("this command needs --seed or QRFUSE_SEED".into()))
}

fn out_dir(o: &OutArgs) -> Result<&Path> {
    fs::create_dir_all(&o.out)?;
    Ok(&o.out)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn load(d: &DataArgs) -> Result<Dataset> {
    Dataset::from_csv_path(&d.data, &d.response, &d.exclude)
}

fn report<T: Serialize>(json: bool, summary: &T, text: &[String]) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(summary)?);
    } else {
        for l in text {
            println!("{l}");
        }
    }
    Ok(())
}

/// Fit on `[0, 1]`-scaled covariates and map back, or fit as given.
fn fit_scaled(
    ds: &Dataset,
    grid: &TauGrid,
    cfg: &EstimatorConfig,
    scale: Scaling,
) -> Result<QuantileFit> {
    match scale {
        Scaling::Unit if ds.n_covariates() > 0 => {
            let (s, map) = scale_to_unit(ds)?;
            fit(&s, grid, cfg)?.back_transform(&map)
        }
        _ => fit(ds, grid, cfg),
    }
}

#[derive(Serialize)]
struct FitSummary {
    estimator: String,
    objective: f64,
    crossing_rate: f64,
    iterations: usize,
    files: Vec<PathBuf>,
    diagnostics: Vec<String>,
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    let cfg = config(kind(&a.estimator)?, a.alpha, a.lambda)?;
    let grid = tau_grid(&a.taus)?;
    let ds = load(&a.data)?;
    let f = fit_scaled(&ds, &grid, &cfg, a.data.scale)?;
    let dir = out_dir(&a.out)?;
    f.write_json(create(dir, "fit.json")?)?;
    f.write_coefficients_csv(create(dir, "coefficients.csv")?)?;
    let summary = FitSummary {
        estimator: cfg.to_string(),
        objective: f.objective,
        crossing_rate: f.crossing_rate,
        iterations: f.iterations,
        files: vec![dir.join("fit.json"), dir.join("coefficients.csv")],
        diagnostics: f.diagnostics.clone(),
    };
    let mut text = vec![
        format!("estimator      {}", summary.estimator),
        format!("objective      {}", f.objective),
        format!("crossing_rate  {}", f.crossing_rate),
    ];
    text.extend(f.diagnostics.iter().map(|d| format!("note: {d}")));
    report(a.out.json, &summary, &text)
}

#[derive(Serialize)]
struct CvSummary {
    estimator: String,
    selected: f64,
    candidates: usize,
    failed_candidates: usize,
    profile: PathBuf,
}

pub fn cmd_cv(a: &CvArgs) -> Result<()> {
    let k = kind(&a.estimator)?;
    if !k.has_hyperparameter() {
        return Err(Error::Config(format!(
            "{k} has no hyperparameter to cross-validate"
        )));
    }
    let grid = tau_grid(&a.taus)?;
    let hgrid = hyper_grid(&a.hyper)?;
    let plan = match a.gap {
        Some(gap) => qrfuse::CvPlan::hv_block(a.folds, gap),
        None => qrfuse::CvPlan::k_fold(a.folds, require_seed(a.seed)?),
    };
    let mut ds = load(&a.data)?;
    if a.data.scale == Scaling::Unit && ds.n_covariates() > 0 {
        ds = scale_to_unit(&ds)?.0;
    }
    let res = grid_search(&ds, &grid, k, &hgrid, &plan)?;
    let dir = out_dir(&a.out)?;
    res.write_profile_csv(create(dir, "cv_profile.csv")?)?;
    let summary = CvSummary {
        estimator: k.label().into(),
        selected: res.best,
        candidates: res.profile.len(),
        failed_candidates: res.profile.iter().filter(|c| c.oos_loss.is_none()).count(),
        profile: dir.join("cv_profile.csv"),
    };
    let ordering = match plan.ordering {
        CvOrdering::AsIs => format!("hv-block, gap {}", plan.gap),
        CvOrdering::Shuffled { seed } => format!("shuffled k-fold, seed {seed}"),
    };
    let text = vec![
        format!("estimator  {}", summary.estimator),
        format!("plan       {} folds, {ordering}", plan.folds),
        format!("selected   {}", res.best),
    ];
    report(a.out.json, &summary, &text)
}

#[derive(Serialize)]
struct SimulateSummary {
    dgp: String,
    t: usize,
    reps: usize,
    failures: Vec<qrfuse::simulate::FailureRow>,
    files: Vec<PathBuf>,
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let dgp: DgpName = a.dgp.parse()?;
    let seed = require_seed(a.seed)?;
    let grid = tau_grid(&a.taus)?;
    let specs = estimator_specs(&a.estimators, a.alpha, a.lambda, &a.hyper)?;
    let mut cfg = ExperimentConfig::new(DgpSpec::new(dgp), a.t, grid, specs);
    cfg.n_reps = a.reps;
    cfg.seed = seed;
    cfg.folds = a.folds;
    cfg.n_eval = a.eval_points;
    let out = run_experiment(&cfg)?;
    let dir = out_dir(&a.out)?;
    write_csv(&out.rmise, create(dir, "rmise.csv")?)?;
    write_csv(&out.selection, create(dir, "selection.csv")?)?;
    write_csv(&out.failures, create(dir, "failures.csv")?)?;
    write_csv(&out.choices, create(dir, "hyperparameters.csv")?)?;
    let summary = SimulateSummary {
        dgp: dgp.to_string(),
        t: a.t,
        reps: a.reps,
        failures: out.failures.clone(),
        files: [
            "rmise.csv",
            "selection.csv",
            "failures.csv",
            "hyperparameters.csv",
        ]
        .iter()
        .map(|f| dir.join(f))
        .collect(),
    };
    let mut text = vec![format!("{dgp}, T={}, {} replications", a.t, a.reps)];
    for s in &out.selection {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        text.push(format!(
            "{:<16} TPR {}  TNR {}",
            s.estimator,
            fmt(s.tpr),
            fmt(s.tnr)
        ));
    }
    for f in out.failures.iter().filter(|f| f.n_failed > 0) {
        text.push(format!(
            "{}: {} of {} replications failed",
            f.estimator, f.n_failed, f.n_reps
        ));
    }
    report(a.out.json, &summary, &text)
}

#[derive(Serialize)]
struct ForecastSummary {
    horizon: usize,
    windows: usize,
    scores: Vec<qrfuse::metrics::ScoreRow>,
    files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct FailureLine<'a> {
    estimator: &'a str,
    window: usize,
    message: &'a str,
}

pub fn cmd_forecast(a: &ForecastArgs) -> Result<()> {
    let grid = tau_grid(&a.taus)?;
    let specs = estimator_specs(&a.estimators, a.alpha, a.lambda, &a.hyper)?;
    let series = TimeSeries::from_csv_path(&a.data, &a.date, &a.target, a.regressors.as_deref())?;
    let ex = ForecastExercise {
        pairs: build_target_pairs(&series, a.horizon)?,
        window: a.window,
        grid: grid.clone(),
        estimators: specs,
        policy: TuningPolicy {
            folds: a.folds,
            reselect_every: a.reselect_every,
        },
    };
    let all = rolling_forecast(&ex)?;
    let scores = all
        .iter()
        .map(|f| score_exercise(f, &grid, a.horizon))
        .collect::<Result<Vec<_>>>()?;
    let dir = out_dir(&a.out)?;
    write_forecasts_csv(&all, &grid, create(dir, "forecasts.csv")?)?;
    write_csv(&scores, create(dir, "scores.csv")?)?;
    let failures: Vec<FailureLine> = all
        .iter()
        .flat_map(|f| {
            f.failures.iter().map(|w| FailureLine {
                estimator: &f.estimator,
                window: w.window,
                message: &w.message,
            })
        })
        .collect();
    write_csv(&failures, create(dir, "failures.csv")?)?;
    let mut text = vec![format!(
        "h={}, window {}, {} forecasts per estimator",
        a.horizon,
        a.window,
        ex.n_windows()
    )];
    text.push(format!(
        "{:<16} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "estimator", "CRPS", "center", "left", "CRPS(s)", "center(s)", "left(s)", "logscore"
    ));
    for s in &scores {
        text.push(format!(
            "{:<16} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9}",
            s.estimator,
            s.crps,
            s.center,
            s.left,
            s.crps_sorted,
            s.center_sorted,
            s.left_sorted,
            s.log_score.map_or("-".into(), |v| format!("{v:.4}"))
        ));
    }
    let summary = ForecastSummary {
        horizon: a.horizon,
        windows: ex.n_windows(),
        scores,
        files: ["forecasts.csv", "scores.csv", "failures.csv"]
            .iter()
            .map(|f| dir.join(f))
            .collect(),
    };
    report(a.out.json, &summary, &text)
}
