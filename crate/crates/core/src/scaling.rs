//! Per-column affine maps `x̃ = (x - m) / s` and coefficient back-transforms.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    shift: Vec<f64>,
    scale: Vec<f64>,
}

impl AffineMap {
    pub fn new(shift: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if shift.len() != scale.len() {
            return Err(Error::DimensionMismatch {
                expected: shift.len(),
                found: scale.len(),
            });
        }
        if let Some(s) = scale.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Domain(format!(
                "scale {s} must be positive and finite"
            )));
        }
        if let Some(m) = shift.iter().find(|m| !m.is_finite()) {
            return Err(Error::Domain(format!("shift {m} is not finite")));
        }
        Ok(AffineMap { shift, scale })
    }

    pub fn identity(k: usize) -> Self {
        AffineMap {
            shift: vec![0.0; k],
            scale: vec![1.0; k],
        }
    }

    pub fn len(&self) -> usize {
        self.shift.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shift.is_empty()
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_cols(x.ncols())?;
        let mut out = x.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.shift[j], self.scale[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn inverse(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_cols(x.ncols())?;
        let mut out = x.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.shift[j], self.scale[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        Ok(out)
    }

    pub fn transform_row(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_cols(x.len())?;
        Ok(Array1::from_iter(
            x.iter()
                .enumerate()
                .map(|(j, v)| (v - self.shift[j]) / self.scale[j]),
        ))
    }

    /// Applies the map to the covariates of `ds`, keeping `y` and names.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let x = self.transform(ds.x())?;
        Dataset::with_names(x, ds.y().clone(), ds.names().to_vec())
    }

    fn check_cols(&self, k: usize) -> Result<()> {
        if k != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: k,
            });
        }
        Ok(())
    }
}

/// Intercept plus one slope per covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub intercept: f64,
    pub slopes: Vec<f64>,
}

impl Coefficients {
    pub fn predict(&self, x: ArrayView1<f64>) -> f64 {
        self.intercept + x.iter().zip(&self.slopes).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Min-max map of every column onto `[0, 1]`. The column minimum maps to
/// exactly 0 and the maximum to exactly 1.
pub fn scale_to_unit(ds: &Dataset) -> Result<(Dataset, AffineMap)> {
    ds.require_non_constant()?;
    let stats = ds.column_stats();
    let map = AffineMap::new(
        stats.iter().map(|s| s.min).collect(),
        stats.iter().map(|s| s.range()).collect(),
    )?;
    Ok((map.apply(ds)?, map))
}

/// Maps every column onto `[-1, 1]`, minimum to -1 and maximum to 1.
pub fn scale_to_symmetric(ds: &Dataset) -> Result<(Dataset, AffineMap)> {
    ds.require_non_constant()?;
    let stats = ds.column_stats();
    let map = AffineMap::new(
        stats.iter().map(|s| 0.5 * (s.min + s.max)).collect(),
        stats.iter().map(|s| 0.5 * s.range()).collect(),
    )?;
    Ok((map.apply(ds)?, map))
}

/// Coefficients of a model fitted on `map`-transformed covariates, expressed
/// on the original covariates.
pub fn inverse_transform_coefficients(
    beta: &Coefficients,
    map: &AffineMap,
) -> Result<Coefficients> {
    map.check_cols(beta.slopes.len())?;
    let slopes: Vec<f64> = beta
        .slopes
        .iter()
        .zip(map.scale())
        .map(|(b, s)| b / s)
        .collect();
    let shift: f64 = slopes.iter().zip(map.shift()).map(|(b, m)| b * m).sum();
    Ok(Coefficients {
        intercept: beta.intercept - shift,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ds(x: Array2<f64>) -> Dataset {
        let t = x.nrows();
        Dataset::new(x, Array1::zeros(t)).unwrap()
    }

    #[test]
    fn unit_scaling_single_column() {
        let (s, map) = scale_to_unit(&ds(array![[2.0], [4.0], [6.0]])).unwrap();
        assert_eq!(s.x().column(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert_eq!(map.shift(), &[2.0]);
        assert_eq!(map.scale(), &[4.0]);
    }

    #[test]
    fn unit_scaling_is_identity_on_binary_column() {
        let (s, map) = scale_to_unit(&ds(array![[0.0], [1.0], [1.0]])).unwrap();
        assert_eq!(s.x().column(0).to_vec(), vec![0.0, 1.0, 1.0]);
        assert_eq!((map.shift()[0], map.scale()[0]), (0.0, 1.0));
    }

    #[test]
    fn unit_scaling_two_columns() {
        let (s, map) = scale_to_unit(&ds(array![[0.0, -1.0], [10.0, 1.0]])).unwrap();
        assert_eq!(s.x(), &array![[0.0, 0.0], [1.0, 1.0]]);
        assert_eq!(map.shift(), &[0.0, -1.0]);
        assert_eq!(map.scale(), &[10.0, 2.0]);
    }

    #[test]
    fn unit_scaling_rejects_constant_column() {
        let err = scale_to_unit(&ds(array![[1.0, 5.0], [2.0, 5.0]])).unwrap_err();
        assert!(matches!(err, Error::ConstantColumn { ref column } if column == "x2"));
    }

    #[test]
    fn exact_endpoints_for_awkward_values() {
        let (s, _) = scale_to_unit(&ds(array![[0.1], [0.7], [0.3]])).unwrap();
        assert_eq!(s.column_stats()[0].min, 0.0);
        assert_eq!(s.column_stats()[0].max, 1.0);
    }

    #[test]
    fn symmetric_scaling() {
        let (s, map) = scale_to_symmetric(&ds(array![[2.0], [4.0], [6.0]])).unwrap();
        assert_eq!(s.x().column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        assert_eq!((map.shift()[0], map.scale()[0]), (4.0, 2.0));
    }

    #[test]
    fn inverse_transform_examples() {
        let id = AffineMap::identity(2);
        let b = Coefficients {
            intercept: 0.3,
            slopes: vec![1.0, -2.0],
        };
        assert_eq!(inverse_transform_coefficients(&b, &id).unwrap(), b);

        let map = AffineMap::new(vec![3.0], vec![4.0]).unwrap();
        let b = Coefficients {
            intercept: 1.0,
            slopes: vec![2.0],
        };
        let o = inverse_transform_coefficients(&b, &map).unwrap();
        assert_eq!(
            o,
            Coefficients {
                intercept: -0.5,
                slopes: vec![0.5]
            }
        );
        assert_eq!(o.predict(array![3.0].view()), b.predict(array![0.0].view()));
        assert_eq!(o.predict(array![7.0].view()), b.predict(array![1.0].view()));

        let b = Coefficients {
            intercept: 2.5,
            slopes: vec![0.0],
        };
        assert_eq!(
            inverse_transform_coefficients(&b, &map).unwrap().intercept,
            2.5
        );
    }

    #[test]
    fn inverse_transform_dimension_mismatch() {
        let b = Coefficients {
            intercept: 0.0,
            slopes: vec![1.0],
        };
        assert!(inverse_transform_coefficients(&b, &AffineMap::identity(2)).is_err());
    }

    #[test]
    fn map_round_trip() {
        let x = array![[1.5, -3.0], [2.25, 7.0], [9.0, 0.125]];
        let map = AffineMap::new(vec![1.2, -0.7], vec![3.3, 0.9]).unwrap();
        let back = map.inverse(&map.transform(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(back.iter()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn invalid_maps() {
        assert!(AffineMap::new(vec![0.0], vec![0.0]).is_err());
        assert!(AffineMap::new(vec![0.0], vec![-1.0]).is_err());
        assert!(AffineMap::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
