//! JSON and tidy CSV forms of a [`QuantileFit`].

use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{EstimatorConfig, GammaSolution, QuantileFit};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Serialized fit. `beta[q][j]` is the slope of variable `j` at quantile `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub schema: u32,
    pub estimator: EstimatorConfig,
    pub taus: Vec<f64>,
    pub variables: Vec<String>,
    pub xi: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub objective: f64,
    pub lp_objective: f64,
    pub crossing_rate: f64,
    pub iterations: usize,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl QuantileFit {
    pub fn to_record(&self) -> FitRecord {
        FitRecord {
            schema: SCHEMA_VERSION,
            estimator: self.estimator,
            taus: self.taus.clone(),
            variables: self.names.clone(),
            xi: self.xi.clone(),
            beta: self
                .beta
                .columns()
                .into_iter()
                .map(|c| c.to_vec())
                .collect(),
            objective: self.objective,
            lp_objective: self.lp_objective,
            crossing_rate: self.crossing_rate,
            iterations: self.iterations,
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn from_record(r: FitRecord) -> Result<QuantileFit> {
        let (q, k) = (r.taus.len(), r.variables.len());
        if r.xi.len() != q || r.beta.len() != q {
            return Err(Error::DimensionMismatch {
                expected: q,
                found: r.beta.len().min(r.xi.len()),
            });
        }
        let mut levels = Array2::zeros((k + 1, q));
        for (c, (xi, slopes)) in r.xi.iter().zip(&r.beta).enumerate() {
            if slopes.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: slopes.len(),
                });
            }
            levels[[0, c]] = *xi;
            for (j, b) in slopes.iter().enumerate() {
                levels[[j + 1, c]] = *b;
            }
        }
        Ok(QuantileFit {
            gamma: GammaSolution::from_levels(&levels),
            beta: levels.slice(ndarray::s![1.., ..]).to_owned(),
            taus: r.taus,
            names: r.variables,
            xi: r.xi,
            objective: r.objective,
            lp_objective: r.lp_objective,
            estimator: r.estimator,
            crossing_rate: r.crossing_rate,
            iterations: r.iterations,
            diagnostics: r.diagnostics,
        })
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.to_record())?;
        Ok(())
    }

    pub fn read_json<R: Read>(input: R) -> Result<QuantileFit> {
        let r: FitRecord = serde_json::from_reader(input)?;
        QuantileFit::from_record(r)
    }

    /// One `tau,variable,coefficient` row per quantile and coefficient, the
    /// intercept listed first as `(intercept)`.
    pub fn write_coefficients_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tau", "variable", "coefficient"])?;
        for (q, tau) in self.taus.iter().enumerate() {
            w.write_record([
                tau.to_string(),
                "(intercept)".into(),
                self.xi[q].to_string(),
            ])?;
            for (j, name) in self.names.iter().enumerate() {
                w.write_record([tau.to_string(), name.clone(), self.beta[[j, q]].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
