//! Joint quantile regression over quantile differences.
//!
//! Estimators are linear programs solved by a bounded simplex ([`lp`]).
//! Around them sit hyperparameter search ([`selection`]), Monte Carlo
//! designs ([`simulate`]), rolling forecasts ([`forecast`]) and the
//! evaluation measures they share ([`metrics`]).

pub mod dataset;
pub mod error;
pub mod estimators;
pub mod forecast;
pub mod grid;
pub mod loss;
pub mod lp;
pub mod metrics;
pub mod scaling;
pub mod selection;
pub mod simulate;

pub use dataset::{ColumnStats, Dataset};
pub use error::{Error, Result};
pub use estimators::{
    crossing_rate, fit, fit_with, fitted_quantiles, sort_quantiles, EstimatorConfig, EstimatorKind,
    GammaSolution, QuantileFit,
};
pub use forecast::{
    build_target_pairs, rolling_forecast, score_exercise, EstimatorForecasts, ForecastExercise,
    TimeSeries, TuningPolicy,
};
pub use grid::TauGrid;
pub use loss::tick_loss;
pub use lp::{LpProblem, LpSolution, LpStatus, SolveOptions};
pub use metrics::{
    log_score, quantile_score, qwcrps, rmise, tpr_tnr, SelectionTruth, WeightScheme,
};
pub use scaling::{scale_to_symmetric, scale_to_unit, AffineMap};
pub use selection::{cv_folds, grid_search, make_grid, CvPlan, HyperGrid, SearchResult};
pub use simulate::{
    draw, run_experiment, selection_truth, true_quantile, DgpName, DgpSpec, EstimatorSpec,
    ExperimentConfig, ExperimentOutput,
};
