//! Relative expected hardware energy demand of a test decoder against an anchor.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::evaluation::percent;
use crate::regression::{
    training_data, EnergyModel, ModelFile, ModelProvenance, RegressionError, Regressor,
};
use crate::types::{Codec, Dataset, DecoderScope, EnergyTarget, FeatureSetKind};

#[derive(Debug, thiserror::Error)]
pub enum RehwedError {
    #[error("test and anchor profiles cover different bitstreams; only in test: [{}], only in anchor: [{}]", only_test.join(", "), only_anchor.join(", "))]
    IdMismatch {
        only_test: Vec<String>,
        only_anchor: Vec<String>,
    },
    #[error("anchor prediction for `{id}` is {value}, ratio undefined")]
    NonPositiveAnchorPrediction { id: String, value: f64 },
    #[error("duplicate bitstream id `{0}` in a profile set")]
    DuplicateId(String),
    #[error("model expects {model} features but the profiles carry {profiles}")]
    KindMismatch {
        model: FeatureSetKind,
        profiles: FeatureSetKind,
    },
    #[error("no profiles to compare")]
    Empty,
    #[error(transparent)]
    Regression(#[from] RegressionError),
}

/// Profiling features of one bitstream decoded by one software decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub id: String,
    pub features: Vec<f64>,
    #[serde(default)]
    pub t_dec_sw: Option<f64>,
    #[serde(default)]
    pub energy_sw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSet {
    pub label: String,
    pub kind: FeatureSetKind,
    pub rows: Vec<ProfileRow>,
}

impl ProfileSet {
    /// Takes the `kind` features of every record; fails naming records without them.
    pub fn from_dataset(
        dataset: &Dataset,
        kind: FeatureSetKind,
        label: impl Into<String>,
    ) -> Result<Self, RehwedError> {
        let missing = dataset.missing(kind, None);
        if !missing.is_empty() {
            return Err(RegressionError::MissingFeature {
                kind,
                target: None,
                ids: missing,
            }
            .into());
        }
        let rows = dataset
            .records
            .iter()
            .map(|r| ProfileRow {
                id: r.id.clone(),
                features: r.features(kind).expect("checked above"),
                t_dec_sw: r.temporal.map(|t| t.t_dec_sw),
                energy_sw: r.energy(EnergyTarget::EnergySw),
            })
            .collect();
        Ok(ProfileSet {
            label: label.into(),
            kind,
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RehwedEntry {
    pub id: String,
    pub test_prediction: f64,
    pub anchor_prediction: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RehwedReport {
    pub anchor_label: String,
    pub test_label: String,
    /// Sorted by id.
    pub per_bitstream: Vec<RehwedEntry>,
    /// Mean of the per-bitstream ratios, as a fraction.
    pub rehwed: f64,
    pub n: usize,
    /// Mean ratio of software decoding times, when both sides carry them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rswdt: Option<f64>,
    /// Mean ratio of software energies, when both sides carry them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rswed: Option<f64>,
}

fn mean_ratio(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.is_empty() || pairs.iter().any(|(_, a)| !(*a > 0.0)) {
        return None;
    }
    Some(pairs.iter().map(|(t, a)| t / a).sum::<f64>() / pairs.len() as f64)
}

impl RehwedReport {
    /// Builds the report from `(id, test, anchor)` predictions in any order.
    pub fn from_predictions(
        anchor_label: &str,
        test_label: &str,
        predictions: &[(String, f64, f64)],
    ) -> Result<Self, RehwedError> {
        if predictions.is_empty() {
            return Err(RehwedError::Empty);
        }
        let mut sorted: Vec<&(String, f64, f64)> = predictions.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let mut per_bitstream = Vec::with_capacity(sorted.len());
        for (id, test, anchor) in sorted {
            if !(*anchor > 0.0) {
                return Err(RehwedError::NonPositiveAnchorPrediction {
                    id: id.clone(),
                    value: *anchor,
                });
            }
            per_bitstream.push(RehwedEntry {
                id: id.clone(),
                test_prediction: *test,
                anchor_prediction: *anchor,
                ratio: test / anchor,
            });
        }
        let n = per_bitstream.len();
        let rehwed = per_bitstream.iter().map(|e| e.ratio).sum::<f64>() / n as f64;
        Ok(RehwedReport {
            anchor_label: anchor_label.to_owned(),
            test_label: test_label.to_owned(),
            per_bitstream,
            rehwed,
            n,
            rswdt: None,
            rswed: None,
        })
    }
}

fn index(set: &ProfileSet) -> Result<BTreeMap<&str, &ProfileRow>, RehwedError> {
    let mut map = BTreeMap::new();
    for row in &set.rows {
        if map.insert(row.id.as_str(), row).is_some() {
            return Err(RehwedError::DuplicateId(row.id.clone()));
        }
    }
    Ok(map)
}

/// Predicts both profile sets with `model` and averages the per-bitstream ratios.
///
/// Rows are joined by id, not by position.
pub fn compute_rehwed(
    model: &EnergyModel,
    test: &ProfileSet,
    anchor: &ProfileSet,
) -> Result<RehwedReport, RehwedError> {
    for set in [test, anchor] {
        if set.kind != model.kind() {
            return Err(RehwedError::KindMismatch {
                model: model.kind(),
                profiles: set.kind,
            });
        }
    }
    let test_rows = index(test)?;
    let anchor_rows = index(anchor)?;
    let only_test: Vec<String> = test_rows
        .keys()
        .filter(|k| !anchor_rows.contains_key(*k))
        .map(|k| k.to_string())
        .collect();
    let only_anchor: Vec<String> = anchor_rows
        .keys()
        .filter(|k| !test_rows.contains_key(*k))
        .map(|k| k.to_string())
        .collect();
    if !only_test.is_empty() || !only_anchor.is_empty() {
        return Err(RehwedError::IdMismatch {
            only_test,
            only_anchor,
        });
    }

    let mut predictions = Vec::with_capacity(test_rows.len());
    let mut times = Vec::new();
    let mut energies = Vec::new();
    for (id, t) in &test_rows {
        let a = anchor_rows[id];
        predictions.push((
            id.to_string(),
            model.predict(&t.features)?,
            model.predict(&a.features)?,
        ));
        if let (Some(x), Some(y)) = (t.t_dec_sw, a.t_dec_sw) {
            times.push((x, y));
        }
        if let (Some(x), Some(y)) = (t.energy_sw, a.energy_sw) {
            energies.push((x, y));
        }
    }
    let mut report = RehwedReport::from_predictions(&anchor.label, &test.label, &predictions)?;
    let n = report.n;
    report.rswdt = if times.len() == n {
        mean_ratio(&times)
    } else {
        None
    };
    report.rswed = if energies.len() == n {
        mean_ratio(&energies)
    } else {
        None
    };
    Ok(report)
}

/// Which records the standardization model is trained on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RehwedTraining {
    pub codecs: Vec<Codec>,
    pub decoder_scope: DecoderScope,
    pub kind: FeatureSetKind,
    pub seed: u64,
}

impl Default for RehwedTraining {
    fn default() -> Self {
        RehwedTraining {
            codecs: vec![Codec::Hevc, Codec::Vp9, Codec::Av1],
            decoder_scope: DecoderScope::Optimized,
            kind: FeatureSetKind::Valgrind13Pe,
            seed: 42,
        }
    }
}

/// Fits the hardware-energy GPR on optimized HEVC, VP9 and AV1 decoders.
pub fn train_rehwed_model(
    train: &Dataset,
    kind: FeatureSetKind,
    seed: u64,
) -> Result<ModelFile, RehwedError> {
    train_rehwed_model_with(
        train,
        &RehwedTraining {
            kind,
            seed,
            ..RehwedTraining::default()
        },
    )
}

pub fn train_rehwed_model_with(
    train: &Dataset,
    config: &RehwedTraining,
) -> Result<ModelFile, RehwedError> {
    let subset = train.filtered(|r| {
        config.codecs.contains(&r.codec) && config.decoder_scope.includes(r.decoder_kind)
    });
    if subset.is_empty() {
        return Err(RegressionError::EmptyTrainingSet.into());
    }
    let (features, targets) = training_data(&subset, config.kind, EnergyTarget::EnergyHw)?;
    let model = EnergyModel::fit(Regressor::Gpr, &features, &targets, config.seed)?;
    let mut codecs = config.codecs.clone();
    codecs.sort();
    codecs.dedup();
    Ok(ModelFile {
        model,
        provenance: Some(ModelProvenance {
            purpose: "rehwed".into(),
            training_codecs: codecs,
            decoder_scope: config.decoder_scope.to_string(),
            seed: config.seed,
        }),
    })
}

/// Columns Anchor, Test, RSWDT, RSWED, REHWED.
pub fn rehwed_table(reports: &[RehwedReport]) -> String {
    let w_anchor = reports
        .iter()
        .map(|r| r.anchor_label.len())
        .chain([6])
        .max()
        .unwrap_or(6);
    let w_test = reports
        .iter()
        .map(|r| r.test_label.len())
        .chain([4])
        .max()
        .unwrap_or(4);
    let opt = |v: Option<f64>| v.map(percent).unwrap_or_else(|| "-".into());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<w_anchor$}  {:<w_test$}  {:>9}  {:>9}  {:>9}",
        "Anchor", "Test", "RSWDT", "RSWED", "REHWED"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<w_anchor$}  {:<w_test$}  {:>9}  {:>9}  {:>9}",
            r.anchor_label,
            r.test_label,
            opt(r.rswdt),
            opt(r.rswed),
            percent(r.rehwed)
        );
    }
    out
}
