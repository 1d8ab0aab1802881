//! Gaussian process regression with an exponential kernel and an explicit
//! linear basis `h(x) = [1, z(x)]`, where `z` is the standardized feature row.
//!
//! Hyperparameters maximize the profile log marginal likelihood, with the basis
//! coefficients fitted by generalized least squares at every evaluation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::features::{standardize, FeatureMatrix, Normalization};
use super::kernel::{covariance_from_distances, distance_matrix, euclidean, GprHyperparams};
use super::nelder_mead::{self, NelderMeadOptions};
use super::RegressionError;
use crate::types::FeatureSetKind;

const JITTER_RELATIVE: f64 = 1e-10;
const JITTER_DOUBLINGS: usize = 6;
const MAX_ITERATIONS: usize = 500;
const SIMPLEX_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GprOptions {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for GprOptions {
    fn default() -> Self {
        GprOptions {
            restarts: 5,
            seed: 42,
        }
    }
}

/// A trained process. Prediction needs only the stored fields; the Cholesky
/// factor and whitened basis are rebuilt from them on load.
#[derive(Debug, Clone)]
pub struct GprModel {
    pub kind: FeatureSetKind,
    pub hyper: GprHyperparams,
    /// Basis coefficients over `[1, z]`, intercept first.
    pub basis_coefficients: Vec<f64>,
    /// Standardized training inputs, one row per sample.
    pub training_inputs: DMatrix<f64>,
    /// `K⁻¹ (y - H γ)`.
    pub dual_weights: Vec<f64>,
    pub normalization: Normalization,
    /// Diagonal jitter the covariance was factorized with.
    pub jitter: f64,
    chol: DMatrix<f64>,
    whitened_basis: DMatrix<f64>,
    basis_cov: DMatrix<f64>,
}

impl PartialEq for GprModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.hyper == other.hyper
            && self.basis_coefficients == other.basis_coefficients
            && self.training_inputs == other.training_inputs
            && self.dual_weights == other.dual_weights
            && self.normalization == other.normalization
            && self.jitter == other.jitter
    }
}

fn basis_matrix(z: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(z.nrows(), z.ncols() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            z[(i, j - 1)]
        }
    })
}

fn cholesky_with_jitter(k: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let mut kj = k.clone();
    for i in 0..kj.nrows() {
        kj[(i, i)] += jitter;
    }
    kj.cholesky().map(|c| c.unpack())
}

/// Factorizes `K + jitter·I`, starting from a trace-relative jitter and doubling it on failure.
fn factorize(
    dist: &DMatrix<f64>,
    hyper: &GprHyperparams,
) -> Result<(DMatrix<f64>, f64), RegressionError> {
    let k = covariance_from_distances(dist, hyper);
    let m = k.nrows() as f64;
    let trace = k.trace();
    let mut jitter = if trace > 0.0 {
        JITTER_RELATIVE * trace / m
    } else {
        JITTER_RELATIVE
    };
    for _ in 0..=JITTER_DOUBLINGS {
        if let Some(l) = cholesky_with_jitter(&k, jitter) {
            return Ok((l, jitter));
        }
        jitter *= 2.0;
    }
    Err(RegressionError::NotPositiveDefinite)
}

/// `argmin ||a x - b||`; minimum-norm solution when `a` is rank deficient.
fn whitened_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let (lo, hi) = r
        .diagonal()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
            (lo.min(d.abs()), hi.max(d.abs()))
        });
    if hi > 0.0 && lo / hi > 1e-12 {
        if let Some(x) = r.solve_upper_triangular(&qr.q().tr_mul(b)) {
            return x;
        }
    }
    let svd = a.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    svd.solve(b, eps)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// `(Aᵀ A)⁺` through the SVD of `A`.
fn basis_covariance(a: &DMatrix<f64>) -> DMatrix<f64> {
    let p = a.ncols();
    if p == 0 {
        return DMatrix::zeros(0, 0);
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let mut cov = DMatrix::zeros(p, p);
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > 1e-12 * smax {
            let v = v_t.row(k).transpose();
            cov += (&v * v.transpose()) / (s * s);
        }
    }
    cov
}

struct Conditioned {
    chol: DMatrix<f64>,
    jitter: f64,
    whitened_basis: DMatrix<f64>,
    gamma: DVector<f64>,
    whitened_residual: DVector<f64>,
}

fn condition(
    dist: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    targets: &DVector<f64>,
    hyper: &GprHyperparams,
) -> Result<Conditioned, RegressionError> {
    let (chol, jitter) = factorize(dist, hyper)?;
    let whitened_basis = chol
        .solve_lower_triangular(basis)
        .ok_or(RegressionError::NotPositiveDefinite)?;
    let whitened_targets = chol
        .solve_lower_triangular(targets)
        .ok_or(RegressionError::NotPositiveDefinite)?;
    let gamma = whitened_least_squares(&whitened_basis, &whitened_targets);
    let whitened_residual = whitened_targets - &whitened_basis * &gamma;
    Ok(Conditioned {
        chol,
        jitter,
        whitened_basis,
        gamma,
        whitened_residual,
    })
}

fn log_likelihood(c: &Conditioned) -> f64 {
    let m = c.chol.nrows() as f64;
    let log_det_half: f64 = c.chol.diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * c.whitened_residual.norm_squared()
        - log_det_half
        - 0.5 * m * (2.0 * std::f64::consts::PI).ln()
}

fn lml_from_distances(
    dist: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    targets: &DVector<f64>,
    hyper: &GprHyperparams,
) -> Result<f64, RegressionError> {
    Ok(log_likelihood(&condition(dist, basis, targets, hyper)?))
}

/// Gaussian log marginal likelihood of `targets - basis·γ̂` under the kernel
/// covariance over `features` (used as given, no standardization applied).
///
/// `basis` may have zero columns.
pub fn log_marginal_likelihood(
    hyper: &GprHyperparams,
    features: &FeatureMatrix,
    targets: &[f64],
    basis: &DMatrix<f64>,
) -> Result<f64, RegressionError> {
    hyper.validate()?;
    let m = features.rows();
    if targets.len() != m || basis.nrows() != m {
        return Err(RegressionError::DimensionMismatch {
            expected: m,
            got: if targets.len() != m {
                targets.len()
            } else {
                basis.nrows()
            },
        });
    }
    let dist = distance_matrix(&features.values);
    lml_from_distances(&dist, basis, &DVector::from_column_slice(targets), hyper)
}

fn check_inputs(
    features: &FeatureMatrix,
    targets: &[f64],
    min_rows: usize,
) -> Result<(), RegressionError> {
    if targets.len() != features.rows() {
        return Err(RegressionError::DimensionMismatch {
            expected: features.rows(),
            got: targets.len(),
        });
    }
    if features.cols() != features.kind.dimension() {
        return Err(RegressionError::DimensionMismatch {
            expected: features.kind.dimension(),
            got: features.cols(),
        });
    }
    if features.rows() < min_rows {
        return Err(RegressionError::TooFewSamples {
            needed: min_rows,
            got: features.rows(),
        });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(RegressionError::NonFiniteTarget);
    }
    Ok(())
}

impl GprModel {
    fn assemble(
        kind: FeatureSetKind,
        hyper: GprHyperparams,
        z: DMatrix<f64>,
        normalization: Normalization,
        conditioned: Conditioned,
    ) -> Result<Self, RegressionError> {
        let dual = conditioned
            .chol
            .tr_solve_lower_triangular(&conditioned.whitened_residual)
            .ok_or(RegressionError::NotPositiveDefinite)?;
        let basis_cov = basis_covariance(&conditioned.whitened_basis);
        Ok(GprModel {
            kind,
            hyper,
            basis_coefficients: conditioned.gamma.iter().copied().collect(),
            training_inputs: z,
            dual_weights: dual.iter().copied().collect(),
            normalization,
            jitter: conditioned.jitter,
            chol: conditioned.chol,
            whitened_basis: conditioned.whitened_basis,
            basis_cov,
        })
    }

    /// Rebuilds a model from its stored fields, refactorizing with the stored jitter.
    pub fn from_parts(
        kind: FeatureSetKind,
        hyper: GprHyperparams,
        basis_coefficients: Vec<f64>,
        training_inputs: DMatrix<f64>,
        dual_weights: Vec<f64>,
        normalization: Normalization,
        jitter: f64,
    ) -> Result<Self, RegressionError> {
        hyper.validate()?;
        let n = kind.dimension();
        let m = training_inputs.nrows();
        normalization.validate(n)?;
        if training_inputs.ncols() != n
            || basis_coefficients.len() != n + 1
            || dual_weights.len() != m
            || m == 0
        {
            return Err(RegressionError::InvalidModel(format!(
                "inconsistent GPR shapes: {m}x{} inputs, {} basis coefficients, {} dual weights",
                training_inputs.ncols(),
                basis_coefficients.len(),
                dual_weights.len()
            )));
        }
        if !(jitter.is_finite() && jitter >= 0.0) {
            return Err(RegressionError::InvalidModel(format!(
                "invalid jitter {jitter}"
            )));
        }
        let dist = distance_matrix(&training_inputs);
        let k = covariance_from_distances(&dist, &hyper);
        let chol = cholesky_with_jitter(&k, jitter).ok_or(RegressionError::NotPositiveDefinite)?;
        let whitened_basis = chol
            .solve_lower_triangular(&basis_matrix(&training_inputs))
            .ok_or(RegressionError::NotPositiveDefinite)?;
        let basis_cov = basis_covariance(&whitened_basis);
        Ok(GprModel {
            kind,
            hyper,
            basis_coefficients,
            training_inputs,
            dual_weights,
            normalization,
            jitter,
            chol,
            whitened_basis,
            basis_cov,
        })
    }

    /// Posterior mean and variance (latent function, noise excluded) at a raw feature row.
    pub fn predict(&self, row: &[f64]) -> Result<(f64, f64), RegressionError> {
        let n = self.kind.dimension();
        if row.len() != n {
            return Err(RegressionError::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
        let z = self.normalization.apply(row);
        let m = self.training_inputs.nrows();
        let k_star = DVector::from_fn(m, |j, _| {
            let xj: Vec<f64> = self.training_inputs.row(j).iter().copied().collect();
            self.hyper.signal_variance * (-euclidean(&z, &xj) / self.hyper.length_scale).exp()
        });
        let basis_part = self.basis_coefficients[0]
            + z.iter()
                .zip(&self.basis_coefficients[1..])
                .map(|(x, g)| x * g)
                .sum::<f64>();
        let kernel_part: f64 = k_star
            .iter()
            .zip(&self.dual_weights)
            .map(|(k, w)| k * w)
            .sum();
        let mean = basis_part + kernel_part;

        let v = self
            .chol
            .solve_lower_triangular(&k_star)
            .ok_or(RegressionError::NotPositiveDefinite)?;
        let latent = self.hyper.signal_variance - v.norm_squared();
        let h_star = DVector::from_fn(n + 1, |j, _| if j == 0 { 1.0 } else { z[j - 1] });
        let r = h_star - self.whitened_basis.tr_mul(&v);
        let basis_term = (r.transpose() * &self.basis_cov * &r)[(0, 0)];
        Ok((mean, (latent + basis_term).max(0.0)))
    }

    /// Mean of the linear basis alone, `h(x)ᵀγ`.
    pub fn basis_mean(&self, row: &[f64]) -> Result<f64, RegressionError> {
        if row.len() != self.kind.dimension() {
            return Err(RegressionError::DimensionMismatch {
                expected: self.kind.dimension(),
                got: row.len(),
            });
        }
        let z = self.normalization.apply(row);
        Ok(self.basis_coefficients[0]
            + z.iter()
                .zip(&self.basis_coefficients[1..])
                .map(|(x, g)| x * g)
                .sum::<f64>())
    }
}

/// Conditions the process on the data at fixed hyperparameters.
pub fn fit_gpr_with_hyper(
    features: &FeatureMatrix,
    targets: &[f64],
    hyper: GprHyperparams,
) -> Result<GprModel, RegressionError> {
    hyper.validate()?;
    check_inputs(features, targets, 1)?;
    let z = standardize(features);
    let normalization = z.normalization.clone().expect("standardized");
    let dist = distance_matrix(&z.values);
    let basis = basis_matrix(&z.values);
    let conditioned = condition(&dist, &basis, &DVector::from_column_slice(targets), &hyper)?;
    GprModel::assemble(features.kind, hyper, z.values, normalization, conditioned)
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len().is_multiple_of(2) {
        0.5 * (values[mid - 1] + values[mid])
    } else {
        values[mid]
    })
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Trains a GPR: standardizes features, then maximizes the marginal likelihood
/// over log hyperparameters with Nelder–Mead from `opts.restarts` seeded starts.
pub fn fit_gpr(
    features: &FeatureMatrix,
    targets: &[f64],
    opts: &GprOptions,
) -> Result<GprModel, RegressionError> {
    check_inputs(features, targets, 3)?;
    let z = standardize(features);
    let normalization = z.normalization.clone().expect("standardized");
    let dist = distance_matrix(&z.values);
    let basis = basis_matrix(&z.values);
    let y = DVector::from_column_slice(targets);
    let m = targets.len();

    let var_y = sample_variance(targets);
    let scale_y = if var_y > 0.0 {
        var_y
    } else {
        let mean = targets.iter().sum::<f64>() / m as f64;
        (mean * mean).max(1.0)
    };
    let gamma0 = whitened_least_squares(&basis, &y);
    let residual: Vec<f64> = (&y - &basis * gamma0).iter().copied().collect();
    let signal0 = sample_variance(&residual).max(1e-6 * scale_y);
    let noise0 = 0.1 * signal0;
    let pairwise: Vec<f64> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .map(|(i, j)| dist[(i, j)])
        .filter(|d| *d > 0.0)
        .collect();
    let length0 = median(pairwise).filter(|l| l.is_finite()).unwrap_or(1.0);

    let lower = [
        (length0 * 1e-3).ln(),
        (scale_y * 1e-12).ln(),
        (scale_y * 1e-12).ln(),
    ];
    let upper = [
        (length0 * 1e3).ln(),
        (scale_y * 1e3).ln(),
        (scale_y * 1e1).ln(),
    ];
    let origin = [length0.ln(), signal0.ln(), noise0.ln()];

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts = vec![origin.to_vec()];
    for _ in 1..opts.restarts.max(1) {
        starts.push(
            origin
                .iter()
                .map(|o| {
                    let step: f64 = StandardNormal.sample(&mut rng);
                    o + step
                })
                .collect::<Vec<f64>>(),
        );
    }

    let to_hyper = |p: &[f64]| GprHyperparams {
        length_scale: p[0].exp(),
        signal_variance: p[1].exp(),
        noise_variance: p[2].exp(),
    };
    let nm = NelderMeadOptions {
        max_iterations: MAX_ITERATIONS,
        tolerance: SIMPLEX_TOLERANCE,
        initial_step: 1.0,
    };
    let mut results: Vec<(f64, Vec<f64>)> = starts
        .iter()
        .map(|start| {
            let objective = |p: &[f64]| match lml_from_distances(&dist, &basis, &y, &to_hyper(p)) {
                Ok(v) => -v,
                Err(_) => f64::INFINITY,
            };
            let found = nelder_mead::minimize(objective, start, &lower, &upper, nm);
            (found.value, found.point)
        })
        .filter(|(v, _)| v.is_finite())
        .collect();
    // stable: equal likelihoods keep restart order
    results.sort_by(|a, b| a.0.total_cmp(&b.0));

    for (_, point) in results {
        let hyper = to_hyper(&point);
        if let Ok(conditioned) = condition(&dist, &basis, &y, &hyper) {
            return GprModel::assemble(features.kind, hyper, z.values, normalization, conditioned);
        }
    }
    Err(RegressionError::OptimizationDiverged {
        restarts: opts.restarts.max(1),
    })
}

pub fn predict_gpr(model: &GprModel, row: &[f64]) -> Result<(f64, f64), RegressionError> {
    model.predict(row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn hyper(l: f64, sf2: f64, sn2: f64) -> GprHyperparams {
        GprHyperparams {
            length_scale: l,
            signal_variance: sf2,
            noise_variance: sn2,
        }
    }

    fn random_rows(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<f64>> {
        (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect()
    }

    #[test]
    fn single_sample_likelihood() {
        let fm = FeatureMatrix::from_rows(FeatureSetKind::Temporal, &[vec![0.3]]).unwrap();
        let sigma2 = 2.5;
        let lml =
            log_marginal_likelihood(&hyper(1.0, sigma2, 0.0), &fm, &[0.0], &DMatrix::zeros(1, 0))
                .unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln();
        assert!((lml - expected).abs() < 1e-9, "{lml} vs {expected}");
    }

    #[test]
    fn likelihood_change_of_variables() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows = random_rows(&mut rng, 12, 3);
        let fm = FeatureMatrix::from_rows(FeatureSetKind::PerfCtc, &rows).unwrap();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r[0] * 2.0 + r[1].sin() + 0.3 * r[2])
            .collect();
        let basis = basis_matrix(&fm.values);
        let h = hyper(1.3, 0.8, 0.05);
        let c = 3.7f64;
        let base = log_marginal_likelihood(&h, &fm, &y, &basis).unwrap();
        let yc: Vec<f64> = y.iter().map(|v| v * c).collect();
        let hc = hyper(1.3, 0.8 * c * c, 0.05 * c * c);
        let scaled = log_marginal_likelihood(&hc, &fm, &yc, &basis).unwrap();
        let expected = base - 12.0 * c.ln();
        assert!(
            (scaled - expected).abs() < 1e-9 * expected.abs().max(1.0),
            "{scaled} vs {expected}"
        );
    }

    #[test]
    fn likelihood_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows = random_rows(&mut rng, 20, 3);
        let fm = FeatureMatrix::from_rows(FeatureSetKind::PerfCtc, &rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        let basis = basis_matrix(&fm.values);
        let a = log_marginal_likelihood(&hyper(1.0, 1.0, 0.1), &fm, &y, &basis).unwrap();
        let b = log_marginal_likelihood(&hyper(1.0, 1.0, 0.1), &fm, &y, &basis).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn noiseless_linear_data_is_reproduced() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = random_rows(&mut rng, 30, 3);
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 4.0 + 2.0 * r[0] - r[1] + 0.5 * r[2])
            .collect();
        let fm = FeatureMatrix::from_rows(FeatureSetKind::PerfCtc, &rows).unwrap();
        let model = fit_gpr(&fm, &y, &GprOptions::default()).unwrap();
        assert!(model.hyper.noise_variance <= 1e-6 * sample_variance(&y));
        for (r, t) in rows.iter().zip(&y) {
            let (mean, var) = model.predict(r).unwrap();
            assert!((mean - t).abs() <= 1e-6 * t.abs().max(1.0), "{mean} vs {t}");
            assert!(var >= 0.0);
        }
    }

    #[test]
    fn same_seed_same_hyperparameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rows = random_rows(&mut rng, 25, 1);
        let y: Vec<f64> = rows
            .iter()
            .map(|r| (2.0 * r[0]).sin() + 0.1 * r[0])
            .collect();
        let fm = FeatureMatrix::from_rows(FeatureSetKind::Temporal, &rows).unwrap();
        let opts = GprOptions {
            restarts: 3,
            seed: 9,
        };
        let a = fit_gpr(&fm, &y, &opts).unwrap();
        let b = fit_gpr(&fm, &y, &opts).unwrap();
        assert_eq!(a.hyper, b.hyper);
        assert_eq!(a, b);
    }

    #[test]
    fn interpolates_without_noise() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.7]).collect();
        let y: Vec<f64> = rows.iter().map(|r| (r[0]).sin() * 3.0 + 10.0).collect();
        let fm = FeatureMatrix::from_rows(FeatureSetKind::Temporal, &rows).unwrap();
        let model = fit_gpr_with_hyper(&fm, &y, hyper(1.0, 2.0, 0.0)).unwrap();
        for (r, t) in rows.iter().zip(&y) {
            let (mean, _) = model.predict(r).unwrap();
            assert!((mean - t).abs() <= 1e-6 * t.abs());
        }
    }

    #[test]
    fn far_prediction_decays_to_basis() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0] + (r[0] * 1.3).cos()).collect();
        let fm = FeatureMatrix::from_rows(FeatureSetKind::Temporal, &rows).unwrap();
        let model = fit_gpr_with_hyper(&fm, &y, hyper(0.5, 1.5, 0.01)).unwrap();
        let far = [1e5];
        let (mean, var) = model.predict(&far).unwrap();
        let basis = model.basis_mean(&far).unwrap();
        assert!((mean - basis).abs() <= 1e-6 * 1.5f64.sqrt());
        assert!(var > 0.0);
    }

    #[test]
    fn variance_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows = random_rows(&mut rng, 15, 3);
        let y: Vec<f64> = rows.iter().map(|r| r[0].exp()).collect();
        let fm = FeatureMatrix::from_rows(FeatureSetKind::PerfCtc, &rows).unwrap();
        let model = fit_gpr(
            &fm,
            &y,
            &GprOptions {
                restarts: 2,
                seed: 1,
            },
        )
        .unwrap();
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-6.0..6.0)).collect();
            assert!(model.predict(&x).unwrap().1 >= 0.0);
        }
        for r in &rows {
            assert!(model.predict(r).unwrap().1 >= 0.0);
        }
    }

    #[test]
    fn too_few_rows() {
        let fm =
            FeatureMatrix::from_rows(FeatureSetKind::Temporal, &[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(
            fit_gpr(&fm, &[1.0, 2.0], &GprOptions::default()),
            Err(RegressionError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn fitted_covariance_is_symmetric_and_factorizable() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let rows = random_rows(&mut rng, 20, 3);
        let y: Vec<f64> = rows.iter().map(|r| r[1] * r[2]).collect();
        let fm = FeatureMatrix::from_rows(FeatureSetKind::PerfCtc, &rows).unwrap();
        let model = fit_gpr(
            &fm,
            &y,
            &GprOptions {
                restarts: 2,
                seed: 2,
            },
        )
        .unwrap();
        let k = covariance_from_distances(&distance_matrix(&model.training_inputs), &model.hyper);
        assert_eq!(k, k.transpose());
        assert!(cholesky_with_jitter(&k, model.jitter).is_some());
    }
}
