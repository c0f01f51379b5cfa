use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature affine transform `(x - mean) / std` fitted on training rows.
///
/// Uses the population standard deviation, so transformed training columns
/// have unit variance. Constant columns get `std = 1.0` and are only centred.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        for col in x.axis_iter(Axis(1)) {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            means.push(mean);
            stds.push(if std > 1e-12 * mean.abs().max(1.0) {
                std
            } else {
                1.0
            });
        }
        Standardizer { means, stds }
    }

    /// Fits a single-column transform, e.g. for a regression target.
    pub fn fit_column(values: &[f64]) -> Self {
        let col = ndarray::ArrayView2::from_shape((values.len(), 1), values).expect("column view");
        Self::fit(col)
    }

    pub fn identity(dim: usize) -> Self {
        Standardizer {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.len() != self.stds.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                got: self.stds.len(),
            });
        }
        if let Some(s) = self.stds.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "standardizer std must be positive and finite, got {s}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, j: usize, value: f64) -> f64 {
        (value - self.means[j]) / self.stds[j]
    }

    pub fn transform_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, v)| self.apply(j, *v))
            .collect())
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.apply(j, *v);
            }
        }
        Ok(out)
    }

    /// Maps a standardised value of column `j` back to the raw scale.
    pub fn invert(&self, j: usize, value: f64) -> f64 {
        value * self.stds[j] + self.means[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn transformed_columns_have_zero_mean_unit_std() {
        let x = array![
            [1.0, 5.0, 3.0],
            [2.0, 5.0, -1.0],
            [4.0, 5.0, 0.5],
            [7.0, 5.0, 2.0]
        ];
        let s = Standardizer::fit(x.view());
        let t = s.transform(x.view()).unwrap();
        for j in [0, 2] {
            let col = t.column(j);
            let mean = col.sum() / 4.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var.sqrt() - 1.0).abs() < 1e-12);
        }
        // constant column: centring only
        assert_eq!(s.stds[1], 1.0);
        assert!(t.column(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn row_and_matrix_transform_agree_bitwise() {
        let x = array![[0.3, -1.7], [2.25, 9.0], [1.0, 1.0]];
        let s = Standardizer::fit(x.view());
        let t = s.transform(x.view()).unwrap();
        for (i, row) in x.rows().into_iter().enumerate() {
            let r = s.transform_row(row.as_slice().unwrap()).unwrap();
            assert_eq!(r.as_slice(), t.row(i).as_slice().unwrap());
        }
    }

    #[test]
    fn rejects_wrong_width() {
        let s = Standardizer::identity(3);
        assert!(matches!(
            s.transform_row(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }
}
