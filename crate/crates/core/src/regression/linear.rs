//! Least-squares energy models: energy = Σ count·coefficient (+ offset).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::features::{standardize, FeatureMatrix, Normalization};
use super::RegressionError;
use crate::types::FeatureSetKind;

/// Reciprocal condition below which a design is treated as singular.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Pivot ratio of the normal-equation Cholesky factor below which the QR route is taken.
const NORMAL_EQUATION_PIVOT_RATIO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearOptions {
    pub intercept: bool,
    pub nonnegative: bool,
}

impl LinearOptions {
    /// Intercept on for the temporal model only, unconstrained coefficients.
    pub fn default_for(kind: FeatureSetKind) -> Self {
        LinearOptions {
            intercept: kind == FeatureSetKind::Temporal,
            nonnegative: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: FeatureSetKind,
    /// Energy per unit of each raw feature (J/count or J/s).
    pub coefficients: Vec<f64>,
    /// Energy offset in joules.
    pub intercept: Option<f64>,
    /// Standardization of the training features, kept for reference.
    pub normalization: Normalization,
}

impl LinearModel {
    pub fn predict(&self, row: &[f64]) -> Result<f64, RegressionError> {
        predict_linear(self, row)
    }
}

/// Solves `min ||a x - b||` through the normal equations, falling back to a
/// Householder QR of `a` when the Gram matrix is ill-conditioned.
pub(crate) fn least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>, RegressionError> {
    let (m, n) = a.shape();
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    if m < n {
        return Err(RegressionError::RankDeficient { rows: m, params: n });
    }
    // equilibrate so the conditioning checks are scale-free
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if norms.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return Err(RegressionError::RankDeficient { rows: m, params: n });
    }
    let scaled = DMatrix::from_fn(m, n, |i, j| a[(i, j)] / norms[j]);
    let unscale = |y: DVector<f64>| DVector::from_fn(n, |j, _| y[j] / norms[j]);

    let gram = scaled.tr_mul(&scaled);
    if let Some(chol) = gram.clone().cholesky() {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
            (lo.min(*d), hi.max(*d))
        });
        if lo / hi >= NORMAL_EQUATION_PIVOT_RATIO {
            return Ok(unscale(chol.solve(&scaled.tr_mul(b))));
        }
    }

    let qr = scaled.qr();
    let r = qr.r();
    let diag = r.diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
        (lo.min(d.abs()), hi.max(d.abs()))
    });
    if !(hi > 0.0) || lo / hi < RANK_TOLERANCE {
        return Err(RegressionError::RankDeficient { rows: m, params: n });
    }
    let qtb = qr.q().tr_mul(b);
    let y = r
        .solve_upper_triangular(&qtb)
        .ok_or(RegressionError::RankDeficient { rows: m, params: n })?;
    Ok(unscale(y))
}

/// Lawson–Hanson active-set solver for `min ||a x - b||` subject to `x >= 0`.
pub(crate) fn nonnegative_least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>, RegressionError> {
    let (m, n) = a.shape();
    let tol = 10.0 * f64::EPSILON * a.norm() * m.max(n) as f64 * b.norm().max(1.0);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 10;

    for _ in 0..max_outer {
        let w = a.tr_mul(&(b - a * &x));
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        match candidate {
            Some(t) if w[t] > tol => passive[t] = true,
            _ => return Ok(x),
        }
        loop {
            let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let sub = a.select_columns(&cols);
            let s_sub = least_squares(&sub, b)?;
            let mut s = DVector::zeros(n);
            for (k, &j) in cols.iter().enumerate() {
                s[j] = s_sub[k];
            }
            if cols.iter().all(|&j| s[j] > 0.0) {
                x = s;
                break;
            }
            let alpha = cols
                .iter()
                .filter(|&&j| s[j] <= 0.0)
                .map(|&j| x[j] / (x[j] - s[j]))
                .fold(f64::INFINITY, f64::min);
            x += (s - &x) * alpha;
            for &j in &cols {
                if x[j] <= tol.max(0.0) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    Ok(x)
}

/// Fits `energy = Σ x_i e_i (+ offset)` by least squares.
///
/// The solve runs on equilibrated columns (centered as well when an intercept is
/// fitted); the stored coefficients are in raw feature units.
pub fn fit_linear(
    features: &FeatureMatrix,
    targets: &[f64],
    opts: LinearOptions,
) -> Result<LinearModel, RegressionError> {
    let (m, n) = (features.rows(), features.cols());
    if targets.len() != m {
        return Err(RegressionError::DimensionMismatch {
            expected: m,
            got: targets.len(),
        });
    }
    if n != features.kind.dimension() {
        return Err(RegressionError::DimensionMismatch {
            expected: features.kind.dimension(),
            got: n,
        });
    }
    let params = n + usize::from(opts.intercept);
    if m < params {
        return Err(RegressionError::RankDeficient { rows: m, params });
    }
    let normalization = standardize(features)
        .normalization
        .expect("standardize always records normalization");

    let (design, y, x_mean, y_mean) = if opts.intercept {
        let y_mean = targets.iter().sum::<f64>() / m as f64;
        let design = DMatrix::from_fn(m, n, |i, j| {
            features.values[(i, j)] - normalization.means[j]
        });
        let y = DVector::from_iterator(m, targets.iter().map(|t| t - y_mean));
        (design, y, normalization.means.clone(), y_mean)
    } else {
        (
            features.values.clone(),
            DVector::from_column_slice(targets),
            vec![0.0; n],
            0.0,
        )
    };
    // a centered constant column carries no information once the intercept is free
    let degenerate = design.column_iter().any(|c| c.norm() == 0.0);
    if opts.intercept && degenerate {
        return Err(RegressionError::RankDeficient { rows: m, params });
    }

    let coef = if opts.nonnegative {
        nonnegative_least_squares(&design, &y)?
    } else {
        least_squares(&design, &y)?
    };
    let coefficients: Vec<f64> = coef.iter().copied().collect();
    let intercept = opts.intercept.then(|| {
        y_mean
            - coefficients
                .iter()
                .zip(&x_mean)
                .map(|(e, mu)| e * mu)
                .sum::<f64>()
    });
    Ok(LinearModel {
        kind: features.kind,
        coefficients,
        intercept,
        normalization,
    })
}

pub fn predict_linear(model: &LinearModel, row: &[f64]) -> Result<f64, RegressionError> {
    if row.len() != model.coefficients.len() {
        return Err(RegressionError::DimensionMismatch {
            expected: model.coefficients.len(),
            got: row.len(),
        });
    }
    let dot: f64 = row
        .iter()
        .zip(&model.coefficients)
        .map(|(x, e)| x * e)
        .sum();
    Ok(dot + model.intercept.unwrap_or(0.0))
}
