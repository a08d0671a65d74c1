//! Rolling-window quantile forecasts and their scoring.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use ndarray::{Array1, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{CsvTable, Dataset};
use crate::error::{Error, Result};
use crate::estimators::{fit, fitted_quantiles, EstimatorConfig};
use crate::grid::TauGrid;
use crate::metrics::{log_score, quantile_score, qwcrps, ScoreRow, WeightScheme};
use crate::scaling::scale_to_unit;
use crate::selection::{grid_search, CvPlan};
use crate::simulate::EstimatorSpec;

/// A dated series: target and regressors observed at the same dates.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dates: Vec<NaiveDate>,
    pub target: Array1<f64>,
    pub regressors: Array2<f64>,
    pub names: Vec<String>,
}

impl TimeSeries {
    pub fn new(
        dates: Vec<NaiveDate>,
        target: Array1<f64>,
        regressors: Array2<f64>,
        names: Vec<String>,
    ) -> Result<Self> {
        let n = dates.len();
        if target.len() != n || regressors.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: target.len().min(regressors.nrows()),
            });
        }
        if names.len() != regressors.ncols() {
            return Err(Error::DimensionMismatch {
                expected: regressors.ncols(),
                found: names.len(),
            });
        }
        if let Some(i) = dates.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Data(format!(
                "dates must be strictly increasing; {} follows {}",
                dates[i + 1],
                dates[i]
            )));
        }
        Ok(TimeSeries {
            dates,
            target,
            regressors,
            names,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn from_csv_path(
        path: impl AsRef<Path>,
        date: &str,
        target: &str,
        regressors: Option<&[String]>,
    ) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?, date, target, regressors)
    }

    /// Reads a headed CSV with an ISO-8601 date column. Without an explicit
    /// regressor list every other numeric column is a regressor; the target
    /// itself is one only when listed.
    pub fn from_csv_reader<R: Read>(
        reader: R,
        date: &str,
        target: &str,
        regressors: Option<&[String]>,
    ) -> Result<Self> {
        let table = CsvTable::read(reader)?;
        let find = |name: &str| {
            table
                .column_index(name)
                .ok_or_else(|| Error::Data(format!("column `{name}` not found")))
        };
        let dc = find(date)?;
        let tc = find(target)?;
        let cols: Vec<usize> = match regressors {
            Some(list) => list.iter().map(|n| find(n)).collect::<Result<_>>()?,
            None => (0..table.headers.len())
                .filter(|&c| c != dc && c != tc && table.is_numeric(c))
                .collect(),
        };
        let dates = table
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                NaiveDate::parse_from_str(r[dc].trim(), "%Y-%m-%d").map_err(|e| Error::Row {
                    row: i + 2,
                    message: format!("bad date `{}`: {e}", r[dc]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let y = Array1::from(table.numeric_column(tc)?);
        let mut x = Array2::zeros((dates.len(), cols.len()));
        for (k, &c) in cols.iter().enumerate() {
            x.column_mut(k)
                .assign(&Array1::from(table.numeric_column(c)?));
        }
        let names = cols.iter().map(|&c| table.headers[c].clone()).collect();
        TimeSeries::new(dates, y, x, names)
    }
}

/// Regressors at `t` paired with the target at `t + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPairs {
    pub origin_dates: Vec<NaiveDate>,
    pub target_dates: Vec<NaiveDate>,
    pub data: Dataset,
    pub horizon: usize,
}

impl TargetPairs {
    pub fn len(&self) -> usize {
        self.origin_dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin_dates.is_empty()
    }
}

pub fn build_target_pairs(series: &TimeSeries, h: usize) -> Result<TargetPairs> {
    let n = series.len();
    if n < h + 2 {
        return Err(Error::Data(format!(
            "{n} observations are too few for horizon {h}; need at least {}",
            h + 2
        )));
    }
    let p = n - h;
    let x = series.regressors.slice(ndarray::s![..p, ..]).to_owned();
    let y = series.target.slice(ndarray::s![h..]).to_owned();
    Ok(TargetPairs {
        origin_dates: series.dates[..p].to_vec(),
        target_dates: series.dates[h..].to_vec(),
        data: Dataset::with_names(x, y, series.names.clone())?,
        horizon: h,
    })
}

/// How tuned estimators get their hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TuningPolicy {
    /// hv-block folds inside a window.
    pub folds: usize,
    /// Re-select every this many windows; `None` selects once on the first.
    pub reselect_every: Option<usize>,
}

impl Default for TuningPolicy {
    fn default() -> Self {
        TuningPolicy {
            folds: 10,
            reselect_every: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForecastExercise {
    pub pairs: TargetPairs,
    pub window: usize,
    pub grid: TauGrid,
    pub estimators: Vec<EstimatorSpec>,
    pub policy: TuningPolicy,
}

impl ForecastExercise {
    /// Windows are fixed-length runs of pairs; window `i` fits on pairs
    /// `i .. i + window` and forecasts pair `i + window`.
    pub fn n_windows(&self) -> usize {
        self.pairs.len().saturating_sub(self.window)
    }

    fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::Config(format!(
                "window {} is too short",
                self.window
            )));
        }
        if self.n_windows() == 0 {
            return Err(Error::Config(format!(
                "{} target pairs leave no forecast after a window of {}",
                self.pairs.len(),
                self.window
            )));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("no estimators to run".into()));
        }
        if self.policy.reselect_every == Some(0) {
            return Err(Error::Config(
                "re-selection interval must be positive".into(),
            ));
        }
        for e in &self.estimators {
            if let EstimatorSpec::Fixed(c) = e {
                c.validate()?;
            }
        }
        Ok(())
    }

    fn window_data(&self, i: usize) -> Result<Dataset> {
        let rows: Vec<usize> = (i..i + self.window).collect();
        self.pairs.data.select_rows(&rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowForecast {
    pub window: usize,
    pub origin_date: NaiveDate,
    pub target_date: NaiveDate,
    pub realized: f64,
    pub unsorted: Vec<f64>,
    pub sorted: Vec<f64>,
    pub hyperparameter: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFailure {
    pub window: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorForecasts {
    pub estimator: String,
    pub forecasts: Vec<WindowForecast>,
    pub failures: Vec<WindowFailure>,
}

/// Fits on a `[0, 1]`-scaled window and predicts at raw regressors `x`.
fn forecast_one(
    window: &Dataset,
    x: ndarray::ArrayView2<f64>,
    grid: &TauGrid,
    cfg: &EstimatorConfig,
) -> Result<Vec<f64>> {
    let (fitted, map) = if window.n_covariates() == 0 {
        (fit(window, grid, cfg)?, None)
    } else {
        let (scaled, map) = scale_to_unit(window)?;
        (fit(&scaled, grid, cfg)?, Some(map))
    };
    let f = match map {
        Some(m) => fitted.back_transform(&m)?,
        None => fitted,
    };
    Ok(fitted_quantiles(&f, x)?.row(0).to_vec())
}

fn select(ex: &ForecastExercise, spec: &EstimatorSpec, i: usize) -> Result<EstimatorConfig> {
    match spec {
        EstimatorSpec::Fixed(c) => Ok(*c),
        EstimatorSpec::Tuned { kind, hypergrid } => {
            let data = ex.window_data(i)?;
            let data = if data.n_covariates() == 0 {
                data
            } else {
                scale_to_unit(&data)?.0
            };
            let plan = CvPlan::hv_block(ex.policy.folds, ex.pairs.horizon);
            Ok(grid_search(&data, &ex.grid, *kind, hypergrid, &plan)?.best_config())
        }
    }
}

fn run_estimator(ex: &ForecastExercise, spec: &EstimatorSpec) -> Result<EstimatorForecasts> {
    let n = ex.n_windows();
    let points: Vec<usize> = match (spec, ex.policy.reselect_every) {
        (EstimatorSpec::Fixed(_), _) | (_, None) => vec![0],
        (_, Some(k)) => (0..n).step_by(k).collect(),
    };
    let configs: Vec<EstimatorConfig> = points
        .iter()
        .map(|&i| select(ex, spec, i))
        .collect::<Result<_>>()?;
    let results: Vec<Result<WindowForecast>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let cfg = configs[points.partition_point(|&p| p <= i) - 1];
            let data = ex.window_data(i)?;
            let at = i + ex.window;
            let x = ex.pairs.data.x().select(Axis(0), &[at]);
            let unsorted = forecast_one(&data, x.view(), &ex.grid, &cfg)?;
            let mut sorted = unsorted.clone();
            sorted.sort_by(f64::total_cmp);
            Ok(WindowForecast {
                window: i,
                origin_date: ex.pairs.origin_dates[at],
                target_date: ex.pairs.target_dates[at],
                realized: ex.pairs.data.y()[at],
                unsorted,
                sorted,
                hyperparameter: cfg.hyperparameter(),
            })
        })
        .collect();
    let mut out = EstimatorForecasts {
        estimator: spec.label(),
        forecasts: vec![],
        failures: vec![],
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(f) => out.forecasts.push(f),
            Err(e) => out.failures.push(WindowFailure {
                window: i,
                message: e.to_string(),
            }),
        }
    }
    Ok(out)
}

/// Rolling fixed-length window forecasts for every estimator of `ex`.
/// Tuned estimators pick their hyperparameter by hv-block CV with gap equal
/// to the horizon, on the first window or every `reselect_every` windows.
pub fn rolling_forecast(ex: &ForecastExercise) -> Result<Vec<EstimatorForecasts>> {
    ex.validate()?;
    ex.estimators.iter().map(|s| run_estimator(ex, s)).collect()
}

/// Table-3 style scores of one estimator's forecasts.
pub fn score_exercise(f: &EstimatorForecasts, grid: &TauGrid, horizon: usize) -> Result<ScoreRow> {
    let n = f.forecasts.len();
    if n == 0 {
        return Err(Error::Domain(format!(
            "{} produced no forecasts to score",
            f.estimator
        )));
    }
    let q = grid.len();
    let mut raw = Array2::zeros((n, q));
    let mut sorted = Array2::zeros((n, q));
    let mut logs = Vec::with_capacity(n);
    for (t, w) in f.forecasts.iter().enumerate() {
        raw.row_mut(t).assign(&Array1::from(quantile_score(
            w.realized,
            &w.unsorted,
            grid,
        )?));
        sorted
            .row_mut(t)
            .assign(&Array1::from(quantile_score(w.realized, &w.sorted, grid)?));
        if q >= 2 {
            logs.push(log_score(w.realized, &w.sorted, grid)?);
        }
    }
    let s = |m: &Array2<f64>, w| qwcrps(m, grid, w);
    Ok(ScoreRow {
        estimator: f.estimator.clone(),
        horizon,
        crps: s(&raw, WeightScheme::Uniform)?,
        center: s(&raw, WeightScheme::Center)?,
        left: s(&raw, WeightScheme::Left)?,
        crps_sorted: s(&sorted, WeightScheme::Uniform)?,
        center_sorted: s(&sorted, WeightScheme::Center)?,
        left_sorted: s(&sorted, WeightScheme::Left)?,
        log_score: (!logs.is_empty()).then(|| logs.iter().sum::<f64>() / n as f64),
        n_windows: n + f.failures.len(),
        n_failed: f.failures.len(),
    })
}

#[derive(Serialize)]
struct ForecastLine<'a> {
    estimator: &'a str,
    origin_date: NaiveDate,
    date: NaiveDate,
    tau: f64,
    unsorted: f64,
    sorted: f64,
    realized: f64,
}

/// One `estimator,origin_date,date,tau,unsorted,sorted,realized` row per
/// window and quantile.
pub fn write_forecasts_csv<W: Write>(
    all: &[EstimatorForecasts],
    grid: &TauGrid,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for f in all {
        for wf in &f.forecasts {
            for (q, &tau) in grid.taus().iter().enumerate() {
                w.serialize(ForecastLine {
                    estimator: &f.estimator,
                    origin_date: wf.origin_date,
                    date: wf.target_date,
                    tau,
                    unsorted: wf.unsorted[q],
                    sorted: wf.sorted[q],
                    realized: wf.realized,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dates(n: usize) -> Vec<NaiveDate> {
        let start = NaiveDate::from_ymd_opt(1973, 1, 1).unwrap();
        (0..n)
            .map(|i| start + chrono::Months::new(3 * i as u32))
            .collect()
    }

    fn lagged(values: &[f64]) -> TimeSeries {
        let n = values.len();
        TimeSeries::new(
            dates(n),
            Array1::from(values.to_vec()),
            Array2::from_shape_vec((n, 1), values.to_vec()).unwrap(),
            vec!["y".into()],
        )
        .unwrap()
    }

    #[test]
    fn pairing() {
        let s = lagged(&[1.0, 2.0, 3.0]);
        let p = build_target_pairs(&s, 1).unwrap();
        assert_eq!(p.data.x().column(0).to_vec(), vec![1.0, 2.0]);
        assert_eq!(p.data.y().to_vec(), vec![2.0, 3.0]);
        assert_eq!(p.target_dates[0], s.dates[1]);
        let p0 = build_target_pairs(&s, 0).unwrap();
        assert_eq!(p0.data.y(), &s.target);
        assert!(build_target_pairs(&s, 2).is_err());
        let long = lagged(&vec![0.5; 200]);
        assert_eq!(build_target_pairs(&long, 4).unwrap().len(), 196);
    }

    #[test]
    fn rejects_unordered_dates() {
        let mut d = dates(3);
        d.swap(0, 1);
        assert!(TimeSeries::new(d, Array1::zeros(3), Array2::zeros((3, 0)), vec![]).is_err());
    }

    #[test]
    fn reads_csv() {
        let text = "date,gdp,nfci,label\n2000-01-01,1.5,0.2,a\n2000-04-01,2.0,-0.1,b\n";
        let s = TimeSeries::from_csv_reader(text.as_bytes(), "date", "gdp", None).unwrap();
        assert_eq!(s.names, vec!["nfci"]);
        assert_eq!(s.target.to_vec(), vec![1.5, 2.0]);
        let bad = "date,gdp\n2000-13-01,1.0\n";
        match TimeSeries::from_csv_reader(bad.as_bytes(), "date", "gdp", None) {
            Err(Error::Row { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_target_gives_exact_forecasts() {
        let n = 30;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let s = TimeSeries::new(
            dates(n),
            Array1::from_elem(n, 2.5),
            Array2::from_shape_vec((n, 1), x).unwrap(),
            vec!["x".into()],
        )
        .unwrap();
        let grid = TauGrid::with_spacing(0.2).unwrap();
        let ex = ForecastExercise {
            pairs: build_target_pairs(&s, 1).unwrap(),
            window: 12,
            grid: grid.clone(),
            estimators: vec![EstimatorSpec::Fixed(EstimatorConfig::qr())],
            policy: TuningPolicy::default(),
        };
        assert_eq!(ex.n_windows(), 29 - 12);
        let out = rolling_forecast(&ex).unwrap();
        for w in &out[0].forecasts {
            assert!(w.unsorted.iter().all(|v| (v - 2.5).abs() < 1e-9));
        }
        let score = score_exercise(&out[0], &grid, 1).unwrap();
        assert!(score.crps < 1e-9 && score.crps_sorted < 1e-9);
        assert!(score.log_score.unwrap().is_finite());
    }

    #[test]
    fn single_window_single_quantile() {
        let g = TauGrid::new(vec![0.5]).unwrap();
        let d = dates(2);
        let f = EstimatorForecasts {
            estimator: "QR".into(),
            forecasts: vec![WindowForecast {
                window: 0,
                origin_date: d[0],
                target_date: d[1],
                realized: 1.0,
                unsorted: vec![0.0],
                sorted: vec![0.0],
                hyperparameter: None,
            }],
            failures: vec![],
        };
        let s = score_exercise(&f, &g, 1).unwrap();
        assert_eq!(s.crps, 0.5);
        assert_eq!(s.log_score, None);
    }
}
