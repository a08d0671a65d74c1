//! Plain-text dump of an [`LpProblem`] for inspection.
//!
//! Format, one record per line, whitespace separated:
//!
//! ```text
//! LP <num_vars> <num_eq> <num_ub>
//! C <col> <value>            objective entry (non-zeros only)
//! E <row> <col> <value>      equality matrix entry
//! U <row> <col> <value>      inequality matrix entry
//! RE <row> <rhs>             equality right-hand side
//! RU <row> <rhs>             inequality right-hand side
//! END
//! ```
//!
//! Values are written with `{:e}` so they round-trip exactly.

use std::io::{self, Write};

use super::LpProblem;

pub fn write_problem<W: Write>(p: &LpProblem, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "LP {} {} {}",
        p.num_vars(),
        p.eq_rows.len(),
        p.ub_rows.len()
    )?;
    for (j, &c) in p.objective.iter().enumerate() {
        if c != 0.0 {
            writeln!(out, "C {j} {c:e}")?;
        }
    }
    for (i, row) in p.eq_rows.iter().enumerate() {
        for &(c, v) in row.entries() {
            writeln!(out, "E {i} {c} {v:e}")?;
        }
    }
    for (i, row) in p.ub_rows.iter().enumerate() {
        for &(c, v) in row.entries() {
            writeln!(out, "U {i} {c} {v:e}")?;
        }
    }
    for (i, b) in p.eq_rhs.iter().enumerate() {
        writeln!(out, "RE {i} {b:e}")?;
    }
    for (i, b) in p.ub_rhs.iter().enumerate() {
        writeln!(out, "RU {i} {b:e}")?;
    }
    writeln!(out, "END")
}
