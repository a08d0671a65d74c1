use proptest::prelude::*;
use qrfuse::lp::{solve, stack_problems, LpProblem, LpStatus, SolveOptions, SparseRow};

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn row(pairs: &[(usize, f64)]) -> SparseRow {
    SparseRow::new(pairs.to_vec())
}

/// Intercept-only quantile LP: min Σ τu⁺ + (1-τ)u⁻ s.t. ξ⁺ - ξ⁻ + u⁺_t - u⁻_t = y_t.
fn intercept_lp(y: &[f64], tau: f64) -> LpProblem {
    let t = y.len();
    let mut c = vec![0.0, 0.0];
    for _ in 0..t {
        c.push(tau);
        c.push(1.0 - tau);
    }
    let mut p = LpProblem::new(c);
    for (i, &yi) in y.iter().enumerate() {
        p.add_eq(
            row(&[(0, 1.0), (1, -1.0), (2 + 2 * i, 1.0), (3 + 2 * i, -1.0)]),
            yi,
        );
    }
    p
}

fn tick(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        (tau - 1.0) * u
    } else {
        tau * u
    }
}

#[test]
fn maximise_single_variable() {
    let mut p = LpProblem::new(vec![-1.0]);
    p.add_ub(row(&[(0, 1.0)]), 1.0);
    let s = solve(&p, opts()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.z[0] - 1.0).abs() < 1e-12);
    assert!((s.objective + 1.0).abs() < 1e-12);
}

#[test]
fn degenerate_equality_optimum() {
    let mut p = LpProblem::new(vec![1.0, 1.0]);
    p.add_eq(row(&[(0, 1.0), (1, 1.0)]), 1.0);
    let s = solve(&p, opts()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - 1.0).abs() < 1e-12);
}

#[test]
fn median_of_three() {
    let s = solve(&intercept_lp(&[1.0, 2.0, 9.0], 0.5), opts()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.z[0] - s.z[1] - 2.0).abs() < 1e-12);
}

#[test]
fn infeasible_problem() {
    let mut p = LpProblem::new(vec![1.0]);
    p.add_eq(row(&[(0, 1.0)]), -1.0);
    assert_eq!(solve(&p, opts()).unwrap().status, LpStatus::Infeasible);

    let mut p = LpProblem::new(vec![1.0, 1.0]);
    p.add_ub(row(&[(0, 1.0), (1, 1.0)]), 1.0);
    p.add_eq(row(&[(0, 1.0)]), 2.0);
    assert_eq!(solve(&p, opts()).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn unbounded_problem() {
    let mut p = LpProblem::new(vec![-1.0, 0.0]);
    p.add_eq(row(&[(0, 1.0), (1, -1.0)]), 1.0);
    assert_eq!(solve(&p, opts()).unwrap().status, LpStatus::Unbounded);

    let p = LpProblem::new(vec![-1.0]);
    assert_eq!(solve(&p, opts()).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn negative_rhs_inequality_needs_phase_one() {
    // z0 + z1 >= 2, z0 <= 3, min z0 + 2 z1  -> z0 = 2
    let mut p = LpProblem::new(vec![1.0, 2.0]);
    p.add_ub(row(&[(0, -1.0), (1, -1.0)]), -2.0);
    p.add_ub(row(&[(0, 1.0)]), 3.0);
    let s = solve(&p, opts()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - 2.0).abs() < 1e-10);
    assert!(p.max_violation(&s.z) < 1e-9);
}

#[test]
fn redundant_equalities() {
    let mut p = LpProblem::new(vec![1.0, 2.0, 3.0]);
    p.add_eq(row(&[(0, 1.0), (1, 1.0), (2, 1.0)]), 3.0);
    p.add_eq(row(&[(0, 2.0), (1, 2.0), (2, 2.0)]), 6.0);
    p.add_eq(row(&[(1, 1.0), (2, 1.0)]), 1.0);
    let s = solve(&p, opts()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective - 4.0).abs() < 1e-10, "{}", s.objective);
}

#[test]
fn iteration_limit_is_reported() {
    let p = intercept_lp(&[1.0, 5.0, 2.0, 8.0, -3.0, 4.0], 0.3);
    let s = solve(
        &p,
        SolveOptions {
            max_iter: Some(0),
            ..opts()
        },
    )
    .unwrap();
    assert_eq!(s.status, LpStatus::IterationLimit);
}

#[test]
fn stacked_blocks_add_up() {
    let a = intercept_lp(&[1.0, 2.0, 9.0], 0.5);
    let b = intercept_lp(&[-4.0, 0.5, 3.0, 7.0], 0.25);
    let sa = solve(&a, opts()).unwrap().objective;
    let sb = solve(&b, opts()).unwrap().objective;
    let s = solve(&stack_problems(&[a, b]).unwrap(), opts()).unwrap();
    assert!((s.objective - sa - sb).abs() < 1e-10);
}

#[test]
fn three_identical_median_blocks() {
    let a = intercept_lp(&[3.0, -1.0, 4.0, 1.5, 9.0], 0.5);
    let single = solve(&a, opts()).unwrap().objective;
    let stacked = stack_problems(&[a.clone(), a.clone(), a]).unwrap();
    let s = solve(&stacked, opts()).unwrap();
    assert!((s.objective - 3.0 * single).abs() < 1e-10);
}

#[test]
fn empty_problem() {
    let s = solve(&LpProblem::new(vec![]), opts()).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert_eq!(s.objective, 0.0);
}

#[test]
fn malformed_problem_is_an_error() {
    let mut p = LpProblem::new(vec![1.0]);
    p.add_eq(row(&[(4, 1.0)]), 1.0);
    assert!(solve(&p, opts()).is_err());
}

/// Brute-force oracle: enumerate every basis of the slack-augmented
/// equality form and keep the best feasible vertex.
fn vertex_oracle(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars();
    let n_ub = p.ub_rows.len();
    let m = p.num_rows();
    let cols = n + n_ub;
    let mut a = vec![vec![0.0; cols]; m];
    let mut b = vec![0.0; m];
    for (i, (r, rhs)) in p.eq_rows.iter().zip(&p.eq_rhs).enumerate() {
        for &(c, v) in r.entries() {
            a[i][c] = v;
        }
        b[i] = *rhs;
    }
    for (k, (r, rhs)) in p.ub_rows.iter().zip(&p.ub_rhs).enumerate() {
        let i = p.eq_rows.len() + k;
        for &(c, v) in r.entries() {
            a[i][c] = v;
        }
        a[i][n + k] = 1.0;
        b[i] = *rhs;
    }
    let (a, b) = independent_rows(a, b)?;
    let m = a.len();
    let mut best: Option<f64> = None;
    let mut subset = Vec::new();
    fn rec(
        start: usize,
        cols: usize,
        m: usize,
        subset: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if subset.len() == m {
            f(subset);
            return;
        }
        for j in start..cols {
            subset.push(j);
            rec(j + 1, cols, m, subset, f);
            subset.pop();
        }
    }
    let mut visit = |basis: &[usize]| {
        // Gaussian elimination on the m x m system.
        let mut mat: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut r: Vec<f64> = basis.iter().map(|&j| a[i][j]).collect();
                r.push(b[i]);
                r
            })
            .collect();
        for k in 0..m {
            let piv = (k..m).max_by(|&x, &y| mat[x][k].abs().total_cmp(&mat[y][k].abs()));
            let piv = piv.unwrap();
            if mat[piv][k].abs() < 1e-9 {
                return;
            }
            mat.swap(k, piv);
            for i in 0..m {
                if i != k {
                    let f = mat[i][k] / mat[k][k];
                    for j in k..=m {
                        mat[i][j] -= f * mat[k][j];
                    }
                }
            }
        }
        let mut z = vec![0.0; cols];
        for (k, &j) in basis.iter().enumerate() {
            z[j] = mat[k][m] / mat[k][k];
        }
        if z.iter().any(|&v| v < -1e-9) {
            return;
        }
        let obj = p.objective_value(&z[..n]);
        if best.is_none_or(|b| obj < b) {
            best = Some(obj);
        }
    };
    rec(0, cols, m, &mut subset, &mut visit);
    best
}

/// Drops rows of `[A | b]` that are combinations of earlier ones; `None`
/// when some combination reads `0 = c` with `c != 0`.
fn independent_rows(a: Vec<Vec<f64>>, b: Vec<f64>) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let cols = a.first().map_or(0, Vec::len);
    let mut echelon: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    let mut keep = Vec::new();
    for (i, (row, rhs)) in a.iter().zip(&b).enumerate() {
        let mut r = row.clone();
        let mut v = *rhs;
        for (e, ev, lead) in &echelon {
            let f = r[*lead] / e[*lead];
            for j in 0..cols {
                r[j] -= f * e[j];
            }
            v -= f * ev;
        }
        match (0..cols).max_by(|&x, &y| r[x].abs().total_cmp(&r[y].abs())) {
            Some(lead) if r[lead].abs() > 1e-9 => {
                echelon.push((r, v, lead));
                keep.push(i);
            }
            _ if v.abs() > 1e-9 => return None,
            _ => {}
        }
    }
    Some((
        keep.iter().map(|&i| a[i].clone()).collect(),
        keep.iter().map(|&i| b[i]).collect(),
    ))
}

fn small_lp() -> impl Strategy<Value = LpProblem> {
    (2usize..5, 1usize..3, 0usize..2).prop_flat_map(|(n, n_ub, n_eq)| {
        let coef = prop::collection::vec(-3i32..4, n * (n_ub + n_eq));
        let cost = prop::collection::vec(-3i32..4, n);
        let rhs = prop::collection::vec(0i32..6, n_ub + n_eq);
        (coef, cost, rhs).prop_map(move |(coef, cost, rhs)| {
            let mut p = LpProblem::new(cost.iter().map(|&c| c as f64).collect());
            for i in 0..n_ub + n_eq {
                let r = SparseRow::new((0..n).map(|j| (j, coef[i * n + j] as f64)).collect());
                if i < n_ub {
                    p.add_ub(r, rhs[i] as f64);
                } else {
                    p.add_eq(r, rhs[i] as f64 - 2.0);
                }
            }
            // Keep everything bounded.
            p.add_ub(SparseRow::new((0..n).map(|j| (j, 1.0)).collect()), 10.0);
            p
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 300,
        rng_seed: proptest::test_runner::RngSeed::Fixed(7),
        ..ProptestConfig::default()
    })]

    #[test]
    fn matches_vertex_enumeration(p in small_lp()) {
        let s = solve(&p, opts()).unwrap();
        match vertex_oracle(&p) {
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective - best).abs() < 1e-7, "{} vs {}", s.objective, best);
                prop_assert!(p.max_violation(&s.z) < 1e-7);
            }
        }
    }

    #[test]
    fn intercept_lp_hits_the_sample_quantile(
        y in prop::collection::vec(-50.0f64..50.0, 1..25),
        tau in prop::sample::select(vec![0.1, 0.25, 0.5, 0.75, 0.9]),
    ) {
        let s = solve(&intercept_lp(&y, tau), opts()).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        let fitted = s.z[0] - s.z[1];
        let loss = |c: f64| y.iter().map(|&v| tick(v - c, tau)).sum::<f64>();
        // Some order statistic minimises the loss; any LP-optimal tie is fine.
        let best = y.iter().map(|&c| loss(c)).fold(f64::INFINITY, f64::min);
        prop_assert!((loss(fitted) - best).abs() <= 1e-9 * (1.0 + best));
    }

    #[test]
    fn solves_are_deterministic(p in small_lp()) {
        let a = solve(&p, opts()).unwrap();
        let b = solve(&p, opts()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn perturbing_a_zero_variable_never_helps(p in small_lp(), pick in 0usize..8) {
        let s = solve(&p, opts()).unwrap();
        prop_assume!(s.status == LpStatus::Optimal);
        let zeros: Vec<usize> = (0..p.num_vars()).filter(|&j| s.z[j] == 0.0).collect();
        prop_assume!(!zeros.is_empty());
        let j = zeros[pick % zeros.len()];
        let mut q = p.clone();
        q.add_eq(SparseRow::new(vec![(j, 1.0)]), 0.25);
        let t = solve(&q, opts()).unwrap();
        if t.status == LpStatus::Optimal {
            prop_assert!(t.objective >= s.objective - 1e-8);
        }
    }

    #[test]
    fn positive_cost_scaling_keeps_the_argmin(
        y in prop::collection::vec(-10.0f64..10.0, 3..15),
        scale in 0.01f64..100.0,
    ) {
        let p = intercept_lp(&y, 0.3);
        let mut q = p.clone();
        for c in &mut q.objective {
            *c *= scale;
        }
        let a = solve(&p, opts()).unwrap();
        let b = solve(&q, opts()).unwrap();
        let loss = |c: f64| y.iter().map(|&v| tick(v - c, 0.3)).sum::<f64>();
        prop_assert!((loss(a.z[0] - a.z[1]) - loss(b.z[0] - b.z[1])).abs() < 1e-9);
    }
}
