use super::*;
use ndarray::{array, Array1};

fn unit_column() -> Dataset {
    Dataset::new(array![[0.0], [0.5], [1.0]], array![0.0, 1.0, 2.0]).unwrap()
}

fn toy() -> Dataset {
    let x = array![
        [0.1, 0.9],
        [0.4, 0.2],
        [0.8, 0.5],
        [0.3, 0.7],
        [0.6, 0.1],
        [0.9, 0.8],
        [0.2, 0.4],
        [0.7, 0.6]
    ];
    let y = array![1.2, 0.7, 2.1, 1.9, 0.4, 3.3, 0.9, 2.0];
    Dataset::new(x, y).unwrap()
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constraint_at_alpha_one_is_the_worst_case_row() {
    let c = constraint_coefficients(&unit_column(), 1.0).unwrap();
    assert_eq!(c.plus, vec![1.0, 0.0]);
    assert_eq!(c.minus, vec![1.0, 1.0]);
}

#[test]
fn constraint_at_alpha_zero_evaluates_at_the_mean() {
    let c = constraint_coefficients(&unit_column(), 0.0).unwrap();
    assert_eq!(c.plus, vec![1.0, 0.5]);
    assert_eq!(c.minus, vec![1.0, 0.5]);
}

#[test]
fn constraint_on_symmetric_column_scales_with_alpha() {
    let ds = Dataset::new(array![[-1.0], [0.0], [1.0]], array![0.0, 0.0, 0.0]).unwrap();
    for alpha in [0.5, 1.0, 5.0] {
        let c = constraint_coefficients(&ds, alpha).unwrap();
        assert_eq!(c.plus[1], -alpha);
        assert_eq!(c.minus[1], alpha);
    }
}

#[test]
fn constraint_row_layout() {
    let ds = unit_column();
    let grid = TauGrid::new(vec![0.25, 0.75]).unwrap();
    let layout = LpLayout::for_data(&ds, &grid);
    let row = build_constraint_row(&ds, 1.0, 1, &layout).unwrap();
    // ≤ 0 form: −γ⁺₀ + γ⁻₀ + 0·γ⁺₁ + γ⁻₁
    assert_eq!(
        row.entries(),
        &[
            (layout.gamma(1, 0, false), -1.0),
            (layout.gamma(1, 0, true), 1.0),
            (layout.gamma(1, 1, true), 1.0)
        ]
    );
    assert!(build_constraint_row(&ds, 1.0, 0, &layout).is_err());
    assert!(build_constraint_row(&ds, 1.0, 2, &layout).is_err());
}

#[test]
fn constraint_rejects_constant_columns() {
    let ds = Dataset::new(array![[1.0], [1.0]], array![0.0, 1.0]).unwrap();
    assert!(matches!(
        constraint_coefficients(&ds, 1.0),
        Err(Error::ConstantColumn { .. })
    ));
}

#[test]
fn canonicalize_examples() {
    let g = GammaSolution::new(array![[3.0, 0.0]], array![[1.0, 0.0]]).unwrap();
    let c = g.canonicalize();
    assert_eq!(c.plus, array![[2.0, 0.0]]);
    assert_eq!(c.minus, array![[0.0, 0.0]]);
    assert_eq!(c.levels(), g.levels());
}

#[test]
fn levels_round_trip() {
    let levels = array![[1.0, 1.5, 1.25], [0.0, -2.0, 3.0]];
    let g = GammaSolution::from_levels(&levels);
    assert_eq!(g.levels(), levels);
    assert_eq!(g.net(), array![[1.0, 0.5, -0.25], [0.0, -2.0, 5.0]]);
}

#[test]
fn sort_quantiles_examples() {
    let s = sort_quantiles(&array![[2.0, 1.5, 3.0], [1.0, 2.0, 3.0]]);
    assert_eq!(s, array![[1.5, 2.0, 3.0], [1.0, 2.0, 3.0]]);
}

fn manual_fit(xi: Vec<f64>, beta: Array2<f64>) -> QuantileFit {
    let q = xi.len();
    let k = beta.nrows();
    let mut levels = Array2::zeros((k + 1, q));
    levels.row_mut(0).assign(&Array1::from(xi.clone()));
    levels.slice_mut(ndarray::s![1.., ..]).assign(&beta);
    QuantileFit {
        taus: (1..=q).map(|i| i as f64 / (q + 1) as f64).collect(),
        names: (1..=k).map(|j| format!("x{j}")).collect(),
        xi,
        beta,
        gamma: GammaSolution::from_levels(&levels),
        objective: 0.0,
        lp_objective: 0.0,
        estimator: EstimatorConfig::qr(),
        crossing_rate: 0.0,
        iterations: 0,
        diagnostics: vec![],
    }
}

#[test]
fn fitted_quantiles_examples() {
    let fit = manual_fit(vec![1.0, 2.0, 3.0], Array2::zeros((2, 3)));
    let f = fitted_quantiles(&fit, array![[0.3, 9.0], [-4.0, 2.0]].view()).unwrap();
    assert_eq!(f, array![[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]);

    let fit = manual_fit(vec![0.5, 1.5], array![[1.0, 2.0]]);
    let f = fitted_quantiles(&fit, array![[0.0]].view()).unwrap();
    assert_eq!(f, array![[0.5, 1.5]]);

    let x = array![[0.2, -1.0], [1.5, 0.25], [3.0, 2.0]];
    let beta = array![[0.5, -1.0], [2.0, 0.75]];
    let fit = manual_fit(vec![0.1, 0.2], beta.clone());
    let f = fitted_quantiles(&fit, x.view()).unwrap();
    for t in 0..3 {
        for q in 0..2 {
            let direct = fit.xi[q] + x[[t, 0]] * beta[[0, q]] + x[[t, 1]] * beta[[1, q]];
            assert!((f[[t, q]] - direct).abs() < 1e-15);
        }
    }
    assert!(fitted_quantiles(&fit, array![[1.0]].view()).is_err());
}

#[test]
fn crossing_rate_counts_rows() {
    let f = array![[1.0, 2.0], [2.0, 1.0], [1.0, 1.0 - 1e-9], [3.0, 3.0]];
    assert_eq!(crossing_rate(&f), 0.25);
}

#[test]
fn intercept_only_median() {
    let ds = Dataset::new(Array2::zeros((3, 0)), array![1.0, 2.0, 9.0]).unwrap();
    let grid = TauGrid::new(vec![0.5]).unwrap();
    let fit = fit(&ds, &grid, &EstimatorConfig::qr()).unwrap();
    assert!((fit.xi[0] - 2.0).abs() < 1e-12);
    assert!((fit.objective - 4.0).abs() < 1e-12);
}

#[test]
fn config_validation() {
    assert!(EstimatorConfig::gncqr(-1.0).validate().is_err());
    assert!(EstimatorConfig::flqr(f64::NAN).validate().is_err());
    let mut c = EstimatorConfig::qr();
    c.alpha = Some(1.0);
    assert!(c.validate().is_err());
    let c = EstimatorConfig {
        kind: EstimatorKind::Gncqr,
        alpha: None,
        lambda: None,
    };
    assert!(c.validate().is_err());
    assert_eq!(
        "gncqr".parse::<EstimatorKind>().unwrap(),
        EstimatorKind::Gncqr
    );
    assert!("lasso".parse::<EstimatorKind>().is_err());
}

#[test]
fn zero_hyperparameters_reduce_to_qr() {
    let ds = toy();
    let grid = TauGrid::new(vec![0.25, 0.5, 0.75]).unwrap();
    let qr = fit(&ds, &grid, &EstimatorConfig::qr()).unwrap();
    let g0 = fit(&ds, &grid, &EstimatorConfig::gncqr(0.0)).unwrap();
    let f0 = fit(&ds, &grid, &EstimatorConfig::flqr(0.0)).unwrap();
    // Several optima can exist on small data, so compare objectives.
    assert!((qr.objective - g0.objective).abs() < 1e-9);
    assert!((qr.objective - f0.objective).abs() < 1e-9);
}

#[test]
fn brw_does_not_cross_in_sample() {
    let ds = toy();
    let grid = TauGrid::new(vec![0.1, 0.3, 0.5, 0.7, 0.9]).unwrap();
    let f = fit(&ds, &grid, &EstimatorConfig::brw()).unwrap();
    assert_eq!(f.crossing_rate, 0.0);
    let g = fit(&ds, &grid, &EstimatorConfig::gncqr(1.0)).unwrap();
    assert!(max_abs_diff(&f.beta, &g.beta) < 1e-12);
}

#[test]
fn cqr_shares_slopes() {
    let ds = toy();
    let grid = TauGrid::new(vec![0.25, 0.5, 0.75]).unwrap();
    let f = fit(&ds, &grid, &EstimatorConfig::cqr()).unwrap();
    for row in f.beta.rows() {
        assert!(row.iter().all(|b| (b - row[0]).abs() < 1e-12));
    }
}

#[test]
fn json_and_csv_export() {
    let ds = toy();
    let grid = TauGrid::new(vec![0.25, 0.75]).unwrap();
    let f = fit(&ds, &grid, &EstimatorConfig::gncqr(2.0)).unwrap();
    let mut buf = Vec::new();
    f.write_json(&mut buf).unwrap();
    let back = QuantileFit::read_json(buf.as_slice()).unwrap();
    assert_eq!(back.xi, f.xi);
    assert_eq!(back.beta, f.beta);
    assert_eq!(back.estimator, f.estimator);
    assert!(max_abs_diff(&back.gamma.levels(), &f.gamma.levels()) < 1e-12);

    let mut buf = Vec::new();
    f.write_coefficients_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,variable,coefficient");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("0.25,(intercept),"));
    assert!(lines[2].starts_with("0.25,x1,"));
}
