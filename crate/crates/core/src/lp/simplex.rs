//! Revised primal simplex specialised for problems where most rows own a
//! singleton column (slacks, residual splits).
//!
//! Every basis is split into
//!
//! * natural columns: singleton columns, each the basic variable of its own
//!   row, forming a diagonal block;
//! * structural columns: everything else, paired with the set of rows whose
//!   natural column is not basic.
//!
//! Only the square "kernel" `A[kernel_rows, structural]` is inverted. Its
//! explicit inverse is updated in place on every pivot (column or row
//! replacement, bordering, deletion) and rebuilt from an LU factorisation at
//! regular intervals, so the cost per iteration scales with the number of
//! basic structural columns rather than with the row count. Primal values,
//! row prices and reduced costs are updated the same way and recomputed from
//! scratch whenever the kernel is rebuilt.
//!
//! Singleton columns of the same row with opposite signs (the `u⁺`/`u⁻`
//! residual pair of a quantile regression) are partners. When a basic
//! natural column reaches zero along the entering direction and its partner
//! is still worth paying for, the ratio test swaps it for its partner and
//! keeps walking instead of stopping (a bound-flipping ratio test over a
//! piecewise-linear cost). Dantzig pricing is used until a run of degenerate
//! pivots is observed; the solver then falls back to Bland's rule until the
//! objective moves again.

use super::dense::Lu;
use super::{LpProblem, LpSolution, LpStatus, SolveOptions};
use crate::error::Result;

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 40;
/// Pivots between two rebuilds of the kernel inverse.
const REFRESH_EVERY: usize = 50;

/// Compressed sparse lines, used both column-wise and row-wise.
struct Sparse {
    start: Vec<usize>,
    idx: Vec<usize>,
    vals: Vec<f64>,
}

impl Sparse {
    fn line(&self, k: usize) -> (&[usize], &[f64]) {
        let range = self.start[k]..self.start[k + 1];
        (&self.idx[range.clone()], &self.vals[range])
    }

    fn transpose(&self, n_lines: usize) -> Sparse {
        let mut counts = vec![0usize; n_lines + 1];
        for &i in &self.idx {
            counts[i + 1] += 1;
        }
        for k in 0..n_lines {
            counts[k + 1] += counts[k];
        }
        let start = counts.clone();
        let mut fill = counts;
        let mut idx = vec![0; self.idx.len()];
        let mut vals = vec![0.0; self.vals.len()];
        for j in 0..self.start.len() - 1 {
            let (rows, vs) = self.line(j);
            for (&i, &v) in rows.iter().zip(vs) {
                idx[fill[i]] = j;
                vals[fill[i]] = v;
                fill[i] += 1;
            }
        }
        Sparse { start, idx, vals }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Clone, Copy)]
enum Leaving {
    Structural(usize),
    Natural(usize),
}

struct Simplex {
    m: usize,
    n_user: usize,
    n_total: usize,
    first_artificial: usize,
    cols: Sparse,
    rows: Sparse,
    b: Vec<f64>,
    cost: Vec<f64>,
    /// Row of a singleton column, `NONE` for structural columns.
    singleton_row: Vec<usize>,
    singleton_coef: Vec<f64>,
    partner: Vec<usize>,

    basic: Vec<bool>,
    nat: Vec<usize>,
    row_pos: Vec<usize>,
    structural: Vec<usize>,
    struct_pos: Vec<usize>,
    kernel_rows: Vec<usize>,
    /// Inverse of the kernel, column-major: entry `(s, r)` at `r * p + s`.
    inv: Vec<f64>,

    x_struct: Vec<f64>,
    x_nat: Vec<f64>,
    pi: Vec<f64>,
    d: Vec<f64>,
    phase: Phase,

    tol: f64,
}

pub fn solve(problem: &LpProblem, options: SolveOptions) -> Result<LpSolution> {
    problem.validate()?;
    let mut s = Simplex::new(problem, options.tol);
    let max_iter = options
        .max_iter
        .unwrap_or(50 * (problem.num_vars() + problem.num_rows()).max(1));

    let mut iterations = 0;
    if s.n_total > s.first_artificial {
        s.phase = Phase::One;
        let status = s.run(max_iter, &mut iterations);
        if status != LpStatus::Optimal {
            return Ok(s.solution(problem, status, iterations));
        }
        let scale = 1.0 + s.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if s.phase_objective() > s.tol * scale {
            return Ok(s.solution(problem, LpStatus::Infeasible, iterations));
        }
    }
    s.phase = Phase::Two;
    let status = s.run(max_iter, &mut iterations);
    Ok(s.solution(problem, status, iterations))
}

impl Simplex {
    fn new(p: &LpProblem, tol: f64) -> Simplex {
        let n_user = p.num_vars();
        let n_eq = p.eq_rows.len();
        let n_ub = p.ub_rows.len();
        let m = n_eq + n_ub;

        let mut sign = vec![1.0; m];
        let mut b = vec![0.0; m];
        for (i, &rhs) in p.eq_rhs.iter().chain(&p.ub_rhs).enumerate() {
            if rhs < 0.0 {
                sign[i] = -1.0;
            }
            b[i] = rhs.abs();
        }

        // Column-major copy of the sign-normalised constraint matrix.
        let mut counts = vec![0usize; n_user];
        for row in p.eq_rows.iter().chain(&p.ub_rows) {
            for &(c, _) in row.entries() {
                counts[c] += 1;
            }
        }
        let mut start = Vec::with_capacity(n_user + n_ub + m + 1);
        start.push(0);
        for c in &counts {
            start.push(start.last().unwrap() + c);
        }
        let nnz_user = *start.last().unwrap();
        let mut rows = vec![0usize; nnz_user];
        let mut vals = vec![0.0; nnz_user];
        let mut fill = start[..n_user].to_vec();
        for (i, row) in p.eq_rows.iter().chain(&p.ub_rows).enumerate() {
            for &(c, v) in row.entries() {
                rows[fill[c]] = i;
                vals[fill[c]] = sign[i] * v;
                fill[c] += 1;
            }
        }
        let mut cost = p.objective.clone();
        for k in 0..n_ub {
            let i = n_eq + k;
            rows.push(i);
            vals.push(sign[i]);
            start.push(rows.len());
            cost.push(0.0);
        }
        let first_artificial = n_user + n_ub;

        let mut singleton_row = vec![NONE; first_artificial];
        let mut singleton_coef = vec![0.0; first_artificial];
        for j in 0..first_artificial {
            if start[j + 1] - start[j] == 1 {
                singleton_row[j] = rows[start[j]];
                singleton_coef[j] = vals[start[j]];
            }
        }

        // Cheapest singleton of each sign per row; ties go to the lowest index.
        let mut best_pos = vec![NONE; m];
        let mut best_neg = vec![NONE; m];
        for j in 0..first_artificial {
            let i = singleton_row[j];
            if i == NONE {
                continue;
            }
            let a = singleton_coef[j];
            let slot = if a > 0.0 {
                &mut best_pos[i]
            } else {
                &mut best_neg[i]
            };
            let better =
                *slot == NONE || cost[j] / a.abs() < cost[*slot] / singleton_coef[*slot].abs();
            if better {
                *slot = j;
            }
        }
        let mut partner = vec![NONE; first_artificial];
        for j in 0..first_artificial {
            let i = singleton_row[j];
            if i != NONE {
                partner[j] = if singleton_coef[j] > 0.0 {
                    best_neg[i]
                } else {
                    best_pos[i]
                };
            }
        }

        let mut nat = vec![NONE; m];
        for i in 0..m {
            if best_pos[i] != NONE {
                nat[i] = best_pos[i];
            } else {
                nat[i] = start.len() - 1;
                rows.push(i);
                vals.push(1.0);
                start.push(rows.len());
                cost.push(0.0);
                singleton_row.push(i);
                singleton_coef.push(1.0);
                partner.push(NONE);
            }
        }
        let n_total = start.len() - 1;
        let mut basic = vec![false; n_total];
        for &j in &nat {
            basic[j] = true;
        }
        let cols = Sparse {
            start,
            idx: rows,
            vals,
        };
        let rows = cols.transpose(m);

        Simplex {
            m,
            n_user,
            n_total,
            first_artificial,
            cols,
            rows,
            b,
            cost,
            singleton_row,
            singleton_coef,
            partner,
            basic,
            nat,
            row_pos: vec![NONE; m],
            structural: Vec::new(),
            struct_pos: vec![NONE; n_total],
            kernel_rows: Vec::new(),
            inv: Vec::new(),
            x_struct: Vec::new(),
            x_nat: vec![0.0; m],
            pi: vec![0.0; m],
            d: vec![0.0; n_total],
            phase: Phase::Two,
            tol,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.first_artificial
    }

    fn phase_cost(&self, j: usize) -> f64 {
        match (self.phase, self.is_artificial(j)) {
            (Phase::One, true) => 1.0,
            (Phase::One, false) | (Phase::Two, true) => 0.0,
            (Phase::Two, false) => self.cost[j],
        }
    }

    /// Entries of row `i` in the basic structural columns, by position.
    fn struct_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.structural.len()];
        let (cols, vals) = self.rows.line(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let s = self.struct_pos[j];
            if s != NONE {
                out[s] = v;
            }
        }
        out
    }

    /// `vᵀ K⁻¹`, indexed by kernel position.
    fn times_inverse(&self, v: &[f64]) -> Vec<f64> {
        let p = self.structural.len();
        (0..p)
            .map(|r| {
                self.inv[r * p..(r + 1) * p]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Rebuilds the kernel inverse and recomputes primal values, row prices
    /// and reduced costs from scratch. `false` on a singular kernel.
    fn refresh(&mut self) -> bool {
        let p = self.structural.len();
        let mut kernel = vec![0.0; p * p];
        for (s, &j) in self.structural.iter().enumerate() {
            let (rows, vals) = self.cols.line(j);
            for (&i, &v) in rows.iter().zip(vals) {
                let r = self.row_pos[i];
                if r != NONE {
                    kernel[r * p + s] = v;
                }
            }
        }
        let Some(lu) = Lu::factor(p, kernel, 1e-13) else {
            return false;
        };
        let mut inv = vec![0.0; p * p];
        let mut e = vec![0.0; p];
        for r in 0..p {
            e[r] = 1.0;
            inv[r * p..(r + 1) * p].copy_from_slice(&lu.solve(&e));
            e[r] = 0.0;
        }
        self.inv = inv;

        let b_r: Vec<f64> = self.kernel_rows.iter().map(|&i| self.b[i]).collect();
        self.x_struct = lu.solve(&b_r);
        let mut resid = self.b.clone();
        for (s, &j) in self.structural.iter().enumerate() {
            let xs = self.x_struct[s];
            if xs != 0.0 {
                let (rows, vals) = self.cols.line(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    resid[i] -= v * xs;
                }
            }
        }
        for i in 0..self.m {
            let j = self.nat[i];
            if j == NONE {
                self.x_nat[i] = 0.0;
                self.pi[i] = 0.0;
            } else {
                self.x_nat[i] = resid[i] / self.singleton_coef[j];
                self.pi[i] = self.phase_cost(j) / self.singleton_coef[j];
            }
        }
        let rhs: Vec<f64> = self
            .structural
            .iter()
            .map(|&j| {
                let mut v = self.phase_cost(j);
                let (rows, vals) = self.cols.line(j);
                for (&i, &a) in rows.iter().zip(vals) {
                    if self.row_pos[i] == NONE {
                        v -= a * self.pi[i];
                    }
                }
                v
            })
            .collect();
        let pi_r = lu.solve_transposed(&rhs);
        for (r, &i) in self.kernel_rows.iter().enumerate() {
            self.pi[i] = pi_r[r];
        }
        for j in 0..self.n_total {
            self.d[j] = if self.basic[j] {
                0.0
            } else {
                let (rows, vals) = self.cols.line(j);
                let dot: f64 = rows.iter().zip(vals).map(|(&i, &a)| a * self.pi[i]).sum();
                self.phase_cost(j) - dot
            };
        }
        true
    }

    fn phase_objective(&self) -> f64 {
        let mut obj = 0.0;
        for (s, &j) in self.structural.iter().enumerate() {
            obj += self.phase_cost(j) * self.x_struct[s];
        }
        for i in 0..self.m {
            let j = self.nat[i];
            if j != NONE {
                obj += self.phase_cost(j) * self.x_nat[i];
            }
        }
        obj
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let limit = if self.phase == Phase::Two {
            self.first_artificial
        } else {
            self.n_total
        };
        let mut best: Option<(usize, f64)> = None;
        for j in 0..limit {
            if self.basic[j] {
                continue;
            }
            let d = self.d[j];
            if d >= -self.tol {
                continue;
            }
            if bland {
                return Some((j, d));
            }
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        best
    }

    /// Direction `w = B⁻¹ a_e` split into structural and natural parts.
    fn ftran(&self, entering: usize) -> (Vec<f64>, Vec<f64>) {
        let p = self.structural.len();
        let mut w_struct = vec![0.0; p];
        let mut resid = vec![0.0; self.m];
        let (rows, vals) = self.cols.line(entering);
        for (&i, &v) in rows.iter().zip(vals) {
            resid[i] = v;
            let r = self.row_pos[i];
            if r != NONE {
                for (w, a) in w_struct.iter_mut().zip(&self.inv[r * p..(r + 1) * p]) {
                    *w += a * v;
                }
            }
        }
        for (s, &j) in self.structural.iter().enumerate() {
            let ws = w_struct[s];
            if ws != 0.0 {
                let (rows, vals) = self.cols.line(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    resid[i] -= v * ws;
                }
            }
        }
        let mut w_nat = resid;
        for i in 0..self.m {
            let j = self.nat[i];
            w_nat[i] = if j == NONE {
                0.0
            } else {
                w_nat[i] / self.singleton_coef[j]
            };
        }
        (w_struct, w_nat)
    }

    fn run(&mut self, max_iter: usize, iterations: &mut usize) -> LpStatus {
        if !self.refresh() {
            return LpStatus::IterationLimit;
        }
        let mut since_refresh = 0usize;
        let mut degenerate_run = 0usize;
        loop {
            if since_refresh >= REFRESH_EVERY {
                if !self.refresh() {
                    return LpStatus::IterationLimit;
                }
                since_refresh = 0;
            }
            let bland = degenerate_run >= DEGENERATE_RUN;
            let Some((entering, d_e)) = self.choose_entering(bland) else {
                if since_refresh == 0 {
                    return LpStatus::Optimal;
                }
                // Confirm optimality on freshly computed prices.
                if !self.refresh() {
                    return LpStatus::IterationLimit;
                }
                since_refresh = 0;
                continue;
            };
            if *iterations >= max_iter {
                return LpStatus::IterationLimit;
            }

            let (w_struct, w_nat) = self.ftran(entering);
            let Some((theta, leaving, flips)) = self.ratio_test(&w_struct, &w_nat, d_e, bland)
            else {
                if since_refresh == 0 {
                    return LpStatus::Unbounded;
                }
                if !self.refresh() {
                    return LpStatus::IterationLimit;
                }
                since_refresh = 0;
                continue;
            };
            *iterations += 1;
            since_refresh += 1;

            if theta * d_e.abs() <= 1e-13 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.update_duals(d_e, leaving, &flips, &w_struct, &w_nat);
            for (x, w) in self.x_struct.iter_mut().zip(&w_struct) {
                *x -= theta * w;
            }
            for i in 0..self.m {
                if self.nat[i] != NONE {
                    self.x_nat[i] -= theta * w_nat[i];
                }
            }
            for &i in &flips {
                let old = self.nat[i];
                let new = self.partner[old];
                self.x_nat[i] *= self.singleton_coef[old] / self.singleton_coef[new];
                self.basic[old] = false;
                self.basic[new] = true;
                self.d[new] = 0.0;
                self.nat[i] = new;
            }
            self.pivot(entering, leaving, theta, &w_struct, &w_nat);
            self.d[entering] = 0.0;
        }
    }

    /// Applies the change of row prices caused by the flips and the pivot,
    /// and the matching change of every reduced cost.
    fn update_duals(
        &mut self,
        d_e: f64,
        leaving: Leaving,
        flips: &[usize],
        w_struct: &[f64],
        w_nat: &[f64],
    ) {
        let p = self.structural.len();
        let mut dpi = vec![0.0; self.m];
        let mut acc = vec![0.0; p];
        let mut any_acc = false;
        let mut add_row = |this: &Simplex, i: usize, scale: f64, acc: &mut Vec<f64>| {
            let (cols, vals) = this.rows.line(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let s = this.struct_pos[j];
                if s != NONE {
                    acc[s] += scale * v;
                }
            }
            any_acc = true;
        };

        let mut slope = d_e;
        for &i in flips {
            let j = self.nat[i];
            let k = self.partner[j];
            let delta = self.phase_cost(k) / self.singleton_coef[k]
                - self.phase_cost(j) / self.singleton_coef[j];
            dpi[i] += delta;
            add_row(self, i, delta, &mut acc);
            slope -= delta * self.singleton_coef[j] * w_nat[i];
        }
        match leaving {
            Leaving::Structural(s) => {
                let mu = slope / w_struct[s];
                for (r, &i) in self.kernel_rows.iter().enumerate() {
                    dpi[i] += mu * self.inv[r * p + s];
                }
            }
            Leaving::Natural(i) => {
                let j = self.nat[i];
                let mu = slope / w_nat[i] / self.singleton_coef[j];
                dpi[i] += mu;
                add_row(self, i, mu, &mut acc);
            }
        }
        if any_acc {
            let v = self.times_inverse(&acc);
            for (r, &i) in self.kernel_rows.iter().enumerate() {
                dpi[i] -= v[r];
            }
        }
        for (i, &delta) in dpi.iter().enumerate() {
            if delta == 0.0 {
                continue;
            }
            self.pi[i] += delta;
            let (cols, vals) = self.rows.line(i);
            for (&j, &v) in cols.iter().zip(vals) {
                self.d[j] -= delta * v;
            }
        }
    }

    /// Returns the step length, the leaving variable and the rows whose
    /// natural column is swapped for its partner on the way.
    fn ratio_test(
        &self,
        w_struct: &[f64],
        w_nat: &[f64],
        d_e: f64,
        bland: bool,
    ) -> Option<(f64, Leaving, Vec<usize>)> {
        // (value, |w|, column, leaving)
        let mut hard: Vec<(f64, f64, usize, Leaving)> = Vec::new();
        // (ratio, slope increment, column, row)
        let mut soft: Vec<(f64, f64, usize, usize)> = Vec::new();

        for (s, &j) in self.structural.iter().enumerate() {
            let w = w_struct[s];
            if w > PIVOT_TOL {
                hard.push((self.x_struct[s].max(0.0), w, j, Leaving::Structural(s)));
            }
        }
        for i in 0..self.m {
            let j = self.nat[i];
            if j == NONE {
                continue;
            }
            let w = w_nat[i];
            if self.phase == Phase::Two && self.is_artificial(j) {
                if w.abs() > PIVOT_TOL {
                    hard.push((0.0, w.abs(), j, Leaving::Natural(i)));
                }
                continue;
            }
            if w <= PIVOT_TOL {
                continue;
            }
            let x = self.x_nat[i].max(0.0);
            let k = if self.is_artificial(j) {
                NONE
            } else {
                self.partner[j]
            };
            if !bland && k != NONE {
                let inc = w
                    * (self.phase_cost(j)
                        - self.phase_cost(k) * self.singleton_coef[j] / self.singleton_coef[k]);
                if inc > 0.0 {
                    soft.push((x / w, inc, j, i));
                    continue;
                }
            }
            hard.push((x, w, j, Leaving::Natural(i)));
        }

        let hard_pick = if hard.is_empty() {
            None
        } else if bland {
            let mut best = 0;
            for k in 1..hard.len() {
                let (rk, wk, jk, _) = hard[k];
                let (rb, wb, jb, _) = hard[best];
                let (tk, tb) = (rk / wk, rb / wb);
                if tk < tb || (tk == tb && jk < jb) {
                    best = k;
                }
            }
            let (x, w, _, l) = hard[best];
            Some((x / w, l))
        } else {
            // Harris: relax the bound, then take the largest pivot within reach.
            let bound = hard
                .iter()
                .map(|&(x, w, _, _)| (x + self.tol) / w)
                .fold(f64::INFINITY, f64::min);
            let mut best: Option<usize> = None;
            for (k, &(x, w, j, _)) in hard.iter().enumerate() {
                if x / w > bound {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        let (_, wb, jb, _) = hard[b];
                        w > wb || (w == wb && j < jb)
                    }
                };
                if better {
                    best = Some(k);
                }
            }
            best.map(|k| {
                let (x, w, _, l) = hard[k];
                (x / w, l)
            })
        };
        let hard_theta = hard_pick.map_or(f64::INFINITY, |(t, _)| t);

        soft.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        let mut slope = d_e;
        let mut flips = Vec::new();
        for &(theta, inc, _, row) in &soft {
            if theta > hard_theta {
                break;
            }
            if slope + inc >= 0.0 {
                return Some((theta, Leaving::Natural(row), flips));
            }
            slope += inc;
            flips.push(row);
        }
        hard_pick.map(|(theta, l)| (theta, l, flips))
    }

    /// Swaps `entering` into the basis, updating the kernel inverse and the
    /// primal values.
    fn pivot(
        &mut self,
        entering: usize,
        leaving: Leaving,
        theta: f64,
        w_struct: &[f64],
        w_nat: &[f64],
    ) {
        let p = self.structural.len();
        let leaving_col = match leaving {
            Leaving::Structural(s) => self.structural[s],
            Leaving::Natural(i) => self.nat[i],
        };
        self.basic[leaving_col] = false;
        self.basic[entering] = true;

        let e_row = self.singleton_row[entering];
        if e_row == NONE {
            match leaving {
                Leaving::Structural(s) => {
                    // Column replacement.
                    let ws = w_struct[s];
                    for r in 0..p {
                        let col = &mut self.inv[r * p..(r + 1) * p];
                        let piv = col[s] / ws;
                        if piv != 0.0 {
                            for (c, w) in col.iter_mut().zip(w_struct) {
                                *c -= w * piv;
                            }
                        }
                        col[s] = piv;
                    }
                    self.struct_pos[leaving_col] = NONE;
                    self.struct_pos[entering] = s;
                    self.structural[s] = entering;
                    self.x_struct[s] = theta;
                }
                Leaving::Natural(i) => {
                    // Border the kernel with row `i` and the entering column.
                    let v = self.times_inverse(&self.struct_row(i));
                    let sigma = self.singleton_coef[leaving_col] * w_nat[i];
                    let q = p + 1;
                    let mut inv = vec![0.0; q * q];
                    for r in 0..p {
                        let old = &self.inv[r * p..(r + 1) * p];
                        let new = &mut inv[r * q..r * q + p];
                        let f = v[r] / sigma;
                        for ((n, o), u) in new.iter_mut().zip(old).zip(w_struct) {
                            *n = o + u * f;
                        }
                        inv[r * q + p] = -v[r] / sigma;
                    }
                    for s in 0..p {
                        inv[p * q + s] = -w_struct[s] / sigma;
                    }
                    inv[p * q + p] = 1.0 / sigma;
                    self.inv = inv;
                    self.nat[i] = NONE;
                    self.x_nat[i] = 0.0;
                    self.row_pos[i] = p;
                    self.kernel_rows.push(i);
                    self.struct_pos[entering] = p;
                    self.structural.push(entering);
                    self.x_struct.push(theta);
                }
            }
            return;
        }
        if self.nat[e_row] != NONE {
            // Only the natural column of the same row moves.
            self.nat[e_row] = entering;
            self.x_nat[e_row] = theta;
            return;
        }
        let rp = self.row_pos[e_row];
        match leaving {
            Leaving::Structural(s) => {
                // Drop kernel row `rp` and structural column `s`.
                let piv = self.inv[rp * p + s];
                let last = p - 1;
                let mut inv = vec![0.0; last * last];
                for rn in 0..last {
                    let r = if rn == rp { last } else { rn };
                    let f = self.inv[r * p + s] / piv;
                    for sn in 0..last {
                        let so = if sn == s { last } else { sn };
                        inv[rn * last + sn] = self.inv[r * p + so] - self.inv[rp * p + so] * f;
                    }
                }
                self.inv = inv;
                self.struct_pos[leaving_col] = NONE;
                self.structural.swap_remove(s);
                self.x_struct.swap_remove(s);
                if s < last {
                    self.struct_pos[self.structural[s]] = s;
                }
                self.remove_kernel_row(e_row);
            }
            Leaving::Natural(i) => {
                // Replace kernel row `e_row` by row `i`.
                let v = self.times_inverse(&self.struct_row(i));
                let c: Vec<f64> = self.inv[rp * p..(rp + 1) * p].to_vec();
                let vr = v[rp];
                for r in 0..p {
                    let f = (v[r] - if r == rp { 1.0 } else { 0.0 }) / vr;
                    if f != 0.0 {
                        for (a, cs) in self.inv[r * p..(r + 1) * p].iter_mut().zip(&c) {
                            *a -= cs * f;
                        }
                    }
                }
                self.kernel_rows[rp] = i;
                self.row_pos[i] = rp;
                self.row_pos[e_row] = NONE;
                self.nat[i] = NONE;
                self.x_nat[i] = 0.0;
            }
        }
        self.nat[e_row] = entering;
        self.x_nat[e_row] = theta;
    }

    fn remove_kernel_row(&mut self, row: usize) {
        let pos = self.row_pos[row];
        self.kernel_rows.swap_remove(pos);
        if pos < self.kernel_rows.len() {
            self.row_pos[self.kernel_rows[pos]] = pos;
        }
        self.row_pos[row] = NONE;
    }

    fn solution(&mut self, p: &LpProblem, status: LpStatus, iterations: usize) -> LpSolution {
        let mut z = vec![0.0; self.n_user];
        let mut duals = vec![0.0; self.m];
        self.phase = Phase::Two;
        if self.refresh() {
            for (s, &j) in self.structural.iter().enumerate() {
                if j < self.n_user {
                    z[j] = self.x_struct[s];
                }
            }
            for i in 0..self.m {
                let j = self.nat[i];
                if j != NONE && j < self.n_user {
                    z[j] = self.x_nat[i];
                }
            }
            let signs = p.eq_rhs.iter().chain(&p.ub_rhs);
            for ((d, &pi), &rhs) in duals.iter_mut().zip(&self.pi).zip(signs) {
                *d = if rhs < 0.0 { -pi } else { pi };
            }
        }
        for v in &mut z {
            if *v < 0.0 && *v > -self.tol {
                *v = 0.0;
            }
        }
        LpSolution {
            objective: p.objective_value(&z),
            z,
            status,
            iterations,
            duals,
        }
    }
}
