//! Design matrix plus response, with cached per-column statistics.

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl ColumnStats {
    fn of(values: impl Iterator<Item = f64>) -> ColumnStats {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        let mut n = 0usize;
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        // Rounding can push the mean a hair outside the observed range.
        let mean = (sum / n as f64).clamp(min, max);
        ColumnStats { min, mean, max }
    }

    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

/// `T × K` covariates (no intercept column) and a length-`T` response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    names: Vec<String>,
    stats: Vec<ColumnStats>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, names)
    }

    pub fn with_names(x: Array2<f64>, y: Array1<f64>, names: Vec<String>) -> Result<Self> {
        let (t, k) = x.dim();
        if t == 0 {
            return Err(Error::Data("dataset has no observations".into()));
        }
        if y.len() != t {
            return Err(Error::DimensionMismatch {
                expected: t,
                found: y.len(),
            });
        }
        if names.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: names.len(),
            });
        }
        if let Some(((r, c), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Row {
                row: r + 1,
                message: format!("covariate `{}` is not finite", names[c]),
            });
        }
        if let Some(r) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Row {
                row: r + 1,
                message: "response is not finite".into(),
            });
        }
        let stats = x
            .axis_iter(Axis(1))
            .map(|col| ColumnStats::of(col.iter().copied()))
            .collect();
        Ok(Dataset { x, y, names, stats })
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_covariates(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column_stats(&self) -> &[ColumnStats] {
        &self.stats
    }

    /// Fails on the first column whose max equals its min.
    pub fn require_non_constant(&self) -> Result<()> {
        match self.stats.iter().position(|s| s.max <= s.min) {
            Some(j) => Err(Error::ConstantColumn {
                column: self.names[j].clone(),
            }),
            None => Ok(()),
        }
    }

    /// Non-fatal remarks about the design, e.g. fewer rows than parameters.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_obs() < self.n_covariates() + 1 {
            out.push(format!(
                "{} observations for {} coefficients per quantile; the fit is degenerate",
                self.n_obs(),
                self.n_covariates() + 1
            ));
        }
        out
    }

    /// New dataset from the given rows; statistics are recomputed for the
    /// subset.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let x = self.x.select(Axis(0), rows);
        let y = self.y.select(Axis(0), rows);
        Dataset::with_names(x, y, self.names.clone())
    }

    /// Same covariates, new response.
    pub fn with_response(&self, y: Array1<f64>) -> Result<Dataset> {
        Dataset::with_names(self.x.clone(), y, self.names.clone())
    }

    pub fn from_csv_path(
        path: impl AsRef<Path>,
        response: &str,
        exclude: &[String],
    ) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, response, exclude)
    }

    /// Reads a headed, comma-separated file. The column named `response`
    /// becomes `y`; every other column whose non-missing cells all parse as
    /// numbers becomes a covariate unless listed in `exclude`. Missing cells
    /// (empty, `NA`, `NaN`) in a used column reject the file.
    pub fn from_csv_reader<R: Read>(reader: R, response: &str, exclude: &[String]) -> Result<Self> {
        let table = CsvTable::read(reader)?;
        let resp = table
            .column_index(response)
            .ok_or_else(|| Error::Data(format!("response column `{response}` not found")))?;
        for e in exclude {
            if table.column_index(e).is_none() {
                return Err(Error::Data(format!("excluded column `{e}` not found")));
            }
        }
        let covariates: Vec<usize> = (0..table.headers.len())
            .filter(|&c| c != resp && !exclude.contains(&table.headers[c]))
            .filter(|&c| table.is_numeric(c))
            .collect();
        let y = Array1::from(table.numeric_column(resp)?);
        let t = y.len();
        let mut x = Array2::zeros((t, covariates.len()));
        for (k, &c) in covariates.iter().enumerate() {
            let col = table.numeric_column(c)?;
            x.column_mut(k).assign(&Array1::from(col));
        }
        let names = covariates
            .iter()
            .map(|&c| table.headers[c].clone())
            .collect();
        Dataset::with_names(x, y, names)
    }
}

/// A raw string table read from CSV, shared by the dataset and forecast
/// readers.
#[derive(Debug, Clone)]
pub(crate) struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub(crate) fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "na" | "NaN" | "nan")
}

impl CsvTable {
    pub fn read<R: Read>(reader: R) -> Result<CsvTable> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        if rows.is_empty() {
            return Err(Error::Data("file has a header but no data rows".into()));
        }
        Ok(CsvTable { headers, rows })
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn is_numeric(&self, c: usize) -> bool {
        let mut any = false;
        for r in &self.rows {
            let cell = &r[c];
            if is_missing(cell) {
                continue;
            }
            if cell.trim().parse::<f64>().is_err() {
                return false;
            }
            any = true;
        }
        any
    }

    /// Parses a column, reporting every bad row by its file line number.
    pub fn numeric_column(&self, c: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.rows.len());
        let mut missing = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            let cell = r[c].trim();
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => missing.push(i + 2),
            }
        }
        if !missing.is_empty() {
            let lines: Vec<String> = missing.iter().map(|l| l.to_string()).collect();
            return Err(Error::Row {
                row: missing[0],
                message: format!(
                    "column `{}` has missing or non-numeric values on line(s) {}",
                    self.headers[c],
                    lines.join(", ")
                ),
            });
        }
        Ok(out)
    }
}
