//! Sparse linear programs in inequality/equality form over non-negative
//! variables, and the simplex solver used by every estimator.
//!
//! A problem reads
//!
//! ```text
//! minimise    cᵀz
//! subject to  A_eq z  = b_eq
//!             A_ub z <= b_ub
//!             z >= 0
//! ```
//!
//! Free variables are expressed by the caller as the difference of two
//! non-negative variables.

mod dense;
mod dump;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dump::write_problem;
pub use simplex::solve;

/// Feasibility tolerance used when the caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-8;

/// One row of a sparse matrix: `(column, value)` pairs with strictly
/// increasing column indices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    /// Builds a row from unordered pairs. Duplicate columns are summed and
    /// explicit zeros are dropped.
    pub fn new(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(c, _)| c);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (c, v) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => entries.push((c, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        SparseRow { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, z: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, v)| v * z[c]).sum()
    }

    fn shifted(&self, offset: usize) -> SparseRow {
        SparseRow {
            entries: self.entries.iter().map(|&(c, v)| (c + offset, v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<SparseRow>,
    pub eq_rhs: Vec<f64>,
    pub ub_rows: Vec<SparseRow>,
    pub ub_rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        LpProblem {
            objective,
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rows.len() + self.ub_rows.len()
    }

    pub fn add_eq(&mut self, row: SparseRow, rhs: f64) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_ub(&mut self, row: SparseRow, rhs: f64) {
        self.ub_rows.push(row);
        self.ub_rhs.push(rhs);
    }

    /// Checks dimensions, finiteness and the strictly-increasing column
    /// invariant of every row.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.eq_rows.len() != self.eq_rhs.len() || self.ub_rows.len() != self.ub_rhs.len() {
            return Err(Error::MalformedLp(
                "row count does not match right-hand side length".into(),
            ));
        }
        if let Some(j) = self.objective.iter().position(|v| !v.is_finite()) {
            return Err(Error::MalformedLp(format!(
                "objective entry {j} is not finite"
            )));
        }
        let rows = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|r| ("equality", r))
            .chain(
                self.ub_rows
                    .iter()
                    .zip(&self.ub_rhs)
                    .map(|r| ("inequality", r)),
            );
        for (i, (kind, (row, rhs))) in rows.enumerate() {
            if !rhs.is_finite() {
                return Err(Error::MalformedLp(format!(
                    "{kind} row {i}: rhs is not finite"
                )));
            }
            let mut prev: Option<usize> = None;
            for &(c, v) in row.entries() {
                if c >= n {
                    return Err(Error::MalformedLp(format!(
                        "{kind} row {i}: column {c} out of range for {n} variables"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::MalformedLp(format!(
                        "{kind} row {i}: coefficient at column {c} is not finite"
                    )));
                }
                if prev.is_some_and(|p| p >= c) {
                    return Err(Error::MalformedLp(format!(
                        "{kind} row {i}: column indices not strictly increasing"
                    )));
                }
                prev = Some(c);
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective.iter().zip(z).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any constraint (including `z >= 0`) at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let eq = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (r.dot(z) - b).abs());
        let ub = self
            .ub_rows
            .iter()
            .zip(&self.ub_rhs)
            .map(|(r, b)| (r.dot(z) - b).max(0.0));
        let lb = z.iter().map(|v| (-v).max(0.0));
        eq.chain(ub).chain(lb).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub z: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub iterations: usize,
    /// Row prices, equality rows first then inequality rows, in the sign
    /// convention of the original rows (inequality duals are `<= 0`).
    pub duals: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// `None` means `50 * (n + rows)`.
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }
}

/// Block-diagonal concatenation: variables and rows of each block are
/// offset so that no block shares a variable with another.
pub fn stack_problems(blocks: &[LpProblem]) -> Result<LpProblem> {
    if blocks.is_empty() {
        return Err(Error::MalformedLp(
            "cannot stack an empty list of problems".into(),
        ));
    }
    let mut out = LpProblem::default();
    for block in blocks {
        block.validate()?;
        let offset = out.objective.len();
        out.objective.extend_from_slice(&block.objective);
        for (row, &b) in block.eq_rows.iter().zip(&block.eq_rhs) {
            out.add_eq(row.shifted(offset), b);
        }
        for (row, &b) in block.ub_rows.iter().zip(&block.ub_rhs) {
            out.add_ub(row.shifted(offset), b);
        }
    }
    Ok(out)
}
