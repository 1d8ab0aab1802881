use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::RegressionError;
use crate::types::{Dataset, EnergyTarget, FeatureSetKind};

/// Per-column z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Normalization {
    pub fn identity(cols: usize) -> Self {
        Normalization {
            means: vec![0.0; cols],
            scales: vec![1.0; cols],
        }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub(crate) fn validate(&self, cols: usize) -> Result<(), RegressionError> {
        if self.means.len() != cols || self.scales.len() != cols {
            return Err(RegressionError::DimensionMismatch {
                expected: cols,
                got: self.means.len().min(self.scales.len()),
            });
        }
        if self.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(RegressionError::InvalidModel(
                "normalization scales must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Samples × features design matrix for one feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DMatrix<f64>,
    pub kind: FeatureSetKind,
    /// Set once the values have been standardized.
    pub normalization: Option<Normalization>,
}

impl FeatureMatrix {
    pub fn new(kind: FeatureSetKind, values: DMatrix<f64>) -> Result<Self, RegressionError> {
        if values.nrows() == 0 {
            return Err(RegressionError::EmptyTrainingSet);
        }
        if values.ncols() != kind.dimension() {
            return Err(RegressionError::DimensionMismatch {
                expected: kind.dimension(),
                got: values.ncols(),
            });
        }
        Ok(FeatureMatrix {
            values,
            kind,
            normalization: None,
        })
    }

    pub fn from_rows(kind: FeatureSetKind, rows: &[Vec<f64>]) -> Result<Self, RegressionError> {
        let cols = kind.dimension();
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(RegressionError::DimensionMismatch {
                expected: cols,
                got: bad.len(),
            });
        }
        let values = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
        Self::new(kind, values)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }
}

/// Column-wise `(x - mean) / scale` with the sample standard deviation as scale,
/// or scale 1 for constant columns.
pub fn standardize(features: &FeatureMatrix) -> FeatureMatrix {
    let n = features.rows();
    let mut means = Vec::with_capacity(features.cols());
    let mut scales = Vec::with_capacity(features.cols());
    for col in features.values.column_iter() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let sd = var.sqrt();
        let magnitude = col.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let scale = if sd > 0.0 && sd > 1e-14 * magnitude {
            sd
        } else {
            1.0
        };
        means.push(mean);
        scales.push(scale);
    }
    let values = DMatrix::from_fn(n, features.cols(), |i, j| {
        (features.values[(i, j)] - means[j]) / scales[j]
    });
    FeatureMatrix {
        values,
        kind: features.kind,
        normalization: Some(Normalization { means, scales }),
    }
}

/// Extracts the feature matrix and target vector for `kind`/`target`.
///
/// Fails with `MissingFeature` naming every record that lacks either.
pub fn training_data(
    dataset: &Dataset,
    kind: FeatureSetKind,
    target: EnergyTarget,
) -> Result<(FeatureMatrix, Vec<f64>), RegressionError> {
    if dataset.is_empty() {
        return Err(RegressionError::EmptyTrainingSet);
    }
    let missing = dataset.missing(kind, Some(target));
    if !missing.is_empty() {
        return Err(RegressionError::MissingFeature {
            kind,
            target: Some(target),
            ids: missing,
        });
    }
    let rows: Vec<Vec<f64>> = dataset
        .records
        .iter()
        .filter_map(|r| r.features(kind))
        .collect();
    let targets = dataset
        .records
        .iter()
        .filter_map(|r| r.energy(target))
        .collect();
    Ok((FeatureMatrix::from_rows(kind, &rows)?, targets))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_column() {
        let fm = FeatureMatrix::new(
            FeatureSetKind::Temporal,
            DMatrix::from_column_slice(2, 1, &[1.0, 3.0]),
        )
        .unwrap();
        let z = standardize(&fm);
        let norm = z.normalization.as_ref().unwrap();
        assert!((norm.means[0] - 2.0).abs() < 1e-15);
        assert!((norm.scales[0] - 2f64.sqrt()).abs() < 1e-15);
        assert!((z.values[(0, 0)] + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((z.values[(1, 0)] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_column_gets_unit_scale() {
        let fm = FeatureMatrix::new(
            FeatureSetKind::Temporal,
            DMatrix::from_column_slice(3, 1, &[5.0; 3]),
        )
        .unwrap();
        let z = standardize(&fm);
        assert_eq!(z.normalization.unwrap().scales, vec![1.0]);
        assert_eq!(z.values.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn standardize_is_idempotent() {
        let fm = FeatureMatrix::from_rows(
            FeatureSetKind::PerfCtc,
            &[
                vec![1.0, 10.0, 0.1],
                vec![4.0, 30.0, 0.3],
                vec![9.0, 20.0, 0.2],
                vec![2.0, 70.0, 0.9],
            ],
        )
        .unwrap();
        let once = standardize(&fm);
        let twice = standardize(&FeatureMatrix {
            normalization: None,
            ..once.clone()
        });
        for (a, b) in once.values.iter().zip(twice.values.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_width_is_rejected() {
        assert!(matches!(
            FeatureMatrix::from_rows(FeatureSetKind::PerfCtc, &[vec![1.0, 2.0]]),
            Err(RegressionError::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }
}
