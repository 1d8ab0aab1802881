use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::RegressionError;

/// Hyperparameters of the exponential covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GprHyperparams {
    #[serde(rename = "l")]
    pub length_scale: f64,
    #[serde(rename = "sigma_f2")]
    pub signal_variance: f64,
    #[serde(rename = "sigma_n2")]
    pub noise_variance: f64,
}

impl GprHyperparams {
    /// Signal variance may be zero, which reduces the process to its linear basis.
    pub fn validate(&self) -> Result<(), RegressionError> {
        let ok = self.length_scale.is_finite()
            && self.length_scale > 0.0
            && self.signal_variance.is_finite()
            && self.signal_variance >= 0.0
            && self.noise_variance.is_finite()
            && self.noise_variance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(RegressionError::InvalidHyperparameters(*self))
        }
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `σf²·exp(-|xs - xt| / l) + σn²·δ`, where `δ` is 1 only when both rows are the
/// same training sample.
pub fn kernel_exponential(xs: &[f64], xt: &[f64], hyper: &GprHyperparams, same_index: bool) -> f64 {
    let d = euclidean(xs, xt);
    let noise = if same_index {
        hyper.noise_variance
    } else {
        0.0
    };
    hyper.signal_variance * (-d / hyper.length_scale).exp() + noise
}

/// Pairwise Euclidean distances between the rows of `x`.
pub(crate) fn distance_matrix(x: &DMatrix<f64>) -> DMatrix<f64> {
    let m = x.nrows();
    let rows: Vec<Vec<f64>> = (0..m).map(|i| x.row(i).iter().copied().collect()).collect();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = euclidean(&rows[i], &rows[j]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Covariance of the training set, noise term on the diagonal included.
pub(crate) fn covariance_from_distances(
    dist: &DMatrix<f64>,
    hyper: &GprHyperparams,
) -> DMatrix<f64> {
    let m = dist.nrows();
    let mut k = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in j..m {
            let v = if i == j {
                hyper.signal_variance + hyper.noise_variance
            } else {
                hyper.signal_variance * (-dist[(i, j)] / hyper.length_scale).exp()
            };
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}
