use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing quantile levels in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TauGrid {
    taus: Vec<f64>,
}

impl TauGrid {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::Domain("quantile grid is empty".into()));
        }
        if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::Domain(format!(
                "quantile level {t} is outside (0, 1)"
            )));
        }
        if taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(
                "quantile levels must be strictly increasing".into(),
            ));
        }
        Ok(TauGrid { taus })
    }

    /// `start, start + step, …` up to and including `stop` (within rounding).
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::Domain(format!(
                "invalid quantile range {start}:{stop}:{step}"
            )));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        let taus = (0..count)
            .map(|k| round12(start + k as f64 * step))
            .collect();
        Self::new(taus)
    }

    /// Parses `start:stop:step`.
    pub fn parse_range(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(Error::Domain(format!(
                "expected start:stop:step, got `{spec}`"
            )));
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Domain(format!("`{s}` is not a number")))
        };
        Self::range(num(a)?, num(b)?, num(c)?)
    }

    /// Parses a comma-separated list of levels.
    pub fn parse_list(spec: &str) -> Result<Self> {
        let taus = spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Domain(format!("`{s}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(taus)
    }

    /// Equidistant grid with spacing `delta`, starting at 0.1 for spacings
    /// of at least 0.1 and at `delta` otherwise, symmetric about 0.5.
    pub fn with_spacing(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::Domain(format!("invalid quantile spacing {delta}")));
        }
        let start = if delta >= 0.1 { 0.1 } else { delta };
        Self::range(start, 1.0 - start, delta)
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taus.is_empty()
    }
}

impl TryFrom<Vec<f64>> for TauGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        TauGrid::new(v)
    }
}

impl From<TauGrid> for Vec<f64> {
    fn from(g: TauGrid) -> Vec<f64> {
        g.taus
    }
}

fn round12(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}
