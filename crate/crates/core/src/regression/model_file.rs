//! JSON model files.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    EnergyModel, GprHyperparams, GprModel, LinearModel, Normalization, RegressionError, Regressor,
};
use crate::types::{Codec, FeatureSetKind};

pub const FORMAT_VERSION: u32 = 1;

/// Where a persisted model came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelProvenance {
    pub purpose: String,
    pub training_codecs: Vec<Codec>,
    pub decoder_scope: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelJson {
    format_version: u32,
    regressor: Regressor,
    kind: FeatureSetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    intercept: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hyper: Option<GprHyperparams>,
    normalization: Normalization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    training_inputs: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dual_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    jitter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    purpose: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    training_codecs: Option<Vec<Codec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decoder_scope: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

/// A model plus optional provenance, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: EnergyModel,
    pub provenance: Option<ModelProvenance>,
}

fn missing(field: &str) -> RegressionError {
    RegressionError::InvalidModel(format!("missing field `{field}`"))
}

impl ModelFile {
    pub fn new(model: EnergyModel) -> Self {
        ModelFile {
            model,
            provenance: None,
        }
    }

    fn to_json(&self) -> ModelJson {
        let prov = self.provenance.clone();
        let mut json = ModelJson {
            format_version: FORMAT_VERSION,
            regressor: self.model.regressor(),
            kind: self.model.kind(),
            coefficients: None,
            intercept: None,
            gamma: None,
            hyper: None,
            normalization: Normalization::identity(0),
            training_inputs: None,
            dual_weights: None,
            jitter: None,
            purpose: prov.as_ref().map(|p| p.purpose.clone()),
            training_codecs: prov.as_ref().map(|p| p.training_codecs.clone()),
            decoder_scope: prov.as_ref().map(|p| p.decoder_scope.clone()),
            seed: prov.as_ref().map(|p| p.seed),
        };
        match &self.model {
            EnergyModel::Linear(m) => {
                json.coefficients = Some(m.coefficients.clone());
                json.intercept = m.intercept;
                json.normalization = m.normalization.clone();
            }
            EnergyModel::Gpr(m) => {
                json.gamma = Some(m.basis_coefficients.clone());
                json.hyper = Some(m.hyper);
                json.normalization = m.normalization.clone();
                json.training_inputs = Some(
                    (0..m.training_inputs.nrows())
                        .map(|i| m.training_inputs.row(i).iter().copied().collect())
                        .collect(),
                );
                json.dual_weights = Some(m.dual_weights.clone());
                json.jitter = Some(m.jitter);
            }
        }
        json
    }

    fn from_json(json: ModelJson) -> Result<Self, RegressionError> {
        if json.format_version != FORMAT_VERSION {
            return Err(RegressionError::InvalidModel(format!(
                "unsupported format_version {}",
                json.format_version
            )));
        }
        let n = json.kind.dimension();
        json.normalization.validate(n)?;
        let model = match json.regressor {
            Regressor::Lr => {
                let coefficients = json.coefficients.ok_or_else(|| missing("coefficients"))?;
                if coefficients.len() != n {
                    return Err(RegressionError::DimensionMismatch {
                        expected: n,
                        got: coefficients.len(),
                    });
                }
                EnergyModel::Linear(LinearModel {
                    kind: json.kind,
                    coefficients,
                    intercept: json.intercept,
                    normalization: json.normalization,
                })
            }
            Regressor::Gpr => {
                let rows = json
                    .training_inputs
                    .ok_or_else(|| missing("training_inputs"))?;
                if rows.iter().any(|r| r.len() != n) {
                    return Err(RegressionError::InvalidModel(
                        "ragged training_inputs".into(),
                    ));
                }
                let inputs = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
                EnergyModel::Gpr(GprModel::from_parts(
                    json.kind,
                    json.hyper.ok_or_else(|| missing("hyper"))?,
                    json.gamma.ok_or_else(|| missing("gamma"))?,
                    inputs,
                    json.dual_weights.ok_or_else(|| missing("dual_weights"))?,
                    json.normalization,
                    json.jitter.ok_or_else(|| missing("jitter"))?,
                )?)
            }
        };
        let provenance = match (
            json.purpose,
            json.training_codecs,
            json.decoder_scope,
            json.seed,
        ) {
            (Some(purpose), Some(training_codecs), Some(decoder_scope), Some(seed)) => {
                Some(ModelProvenance {
                    purpose,
                    training_codecs,
                    decoder_scope,
                    seed,
                })
            }
            (None, None, None, None) => None,
            _ => {
                return Err(RegressionError::InvalidModel(
                    "incomplete provenance".into(),
                ))
            }
        };
        Ok(ModelFile { model, provenance })
    }

    pub fn to_json_string(&self) -> Result<String, RegressionError> {
        Ok(serde_json::to_string_pretty(&self.to_json())?)
    }

    pub fn from_json_str(text: &str) -> Result<Self, RegressionError> {
        Self::from_json(serde_json::from_str(text)?)
    }
}
