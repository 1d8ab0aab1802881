//! Energy regressors: least-squares linear models and Gaussian process regression.

mod features;
mod gpr;
mod kernel;
mod linear;
mod model_file;
mod nelder_mead;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use features::{standardize, training_data, FeatureMatrix, Normalization};
pub use gpr::{
    fit_gpr, fit_gpr_with_hyper, log_marginal_likelihood, predict_gpr, GprModel, GprOptions,
};
pub use kernel::{kernel_exponential, GprHyperparams};
pub use linear::{fit_linear, predict_linear, LinearModel, LinearOptions};
pub use model_file::{ModelFile, ModelProvenance, FORMAT_VERSION};

use crate::types::{EnergyTarget, FeatureSetKind};

#[derive(Debug, thiserror::Error)]
pub enum RegressionError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("design is rank deficient ({rows} samples for {params} parameters, or collinear/constant features)")]
    RankDeficient { rows: usize, params: usize },
    #[error("kernel matrix is not positive definite even after jitter")]
    NotPositiveDefinite,
    #[error("hyperparameter optimization diverged in all {restarts} restarts")]
    OptimizationDiverged { restarts: usize },
    #[error("invalid hyperparameters {0:?}")]
    InvalidHyperparameters(GprHyperparams),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("targets must be finite")]
    NonFiniteTarget,
    #[error("{} record(s) lack {kind}{}: {}", ids.len(), target.map(|t| format!(" or {t}")).unwrap_or_default(), ids.join(", "))]
    MissingFeature {
        kind: FeatureSetKind,
        target: Option<EnergyTarget>,
        ids: Vec<String>,
    },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regressor {
    Lr,
    Gpr,
}

impl Regressor {
    pub fn as_str(self) -> &'static str {
        match self {
            Regressor::Lr => "lr",
            Regressor::Gpr => "gpr",
        }
    }
}

impl fmt::Display for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regressor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lr" => Ok(Regressor::Lr),
            "gpr" => Ok(Regressor::Gpr),
            other => Err(format!("unknown regressor `{other}` (expected lr or gpr)")),
        }
    }
}

/// A trained estimator of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergyModel {
    Linear(LinearModel),
    Gpr(GprModel),
}

impl EnergyModel {
    /// Trains `regressor` with its default options; `seed` only affects GPR restarts.
    pub fn fit(
        regressor: Regressor,
        features: &FeatureMatrix,
        targets: &[f64],
        seed: u64,
    ) -> Result<Self, RegressionError> {
        match regressor {
            Regressor::Lr => Ok(EnergyModel::Linear(fit_linear(
                features,
                targets,
                LinearOptions::default_for(features.kind),
            )?)),
            Regressor::Gpr => Ok(EnergyModel::Gpr(fit_gpr(
                features,
                targets,
                &GprOptions {
                    seed,
                    ..GprOptions::default()
                },
            )?)),
        }
    }

    pub fn kind(&self) -> FeatureSetKind {
        match self {
            EnergyModel::Linear(m) => m.kind,
            EnergyModel::Gpr(m) => m.kind,
        }
    }

    pub fn regressor(&self) -> Regressor {
        match self {
            EnergyModel::Linear(_) => Regressor::Lr,
            EnergyModel::Gpr(_) => Regressor::Gpr,
        }
    }

    /// Point estimate in joules.
    pub fn predict(&self, row: &[f64]) -> Result<f64, RegressionError> {
        match self {
            EnergyModel::Linear(m) => predict_linear(m, row),
            EnergyModel::Gpr(m) => predict_gpr(m, row).map(|(mean, _)| mean),
        }
    }
}
