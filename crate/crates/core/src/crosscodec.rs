//! Cross-codec prediction: train on some codecs, predict the hardware energy of
//! another from its software profile, then calibrate and verify.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::evaluation::{mape, pearson, percent, EvaluationError};
use crate::regression::{training_data, EnergyModel, RegressionError, Regressor};
use crate::types::{Codec, Dataset, DecoderKind, DecoderScope, EnergyTarget, FeatureSetKind};

#[derive(Debug, thiserror::Error)]
pub enum CrossCodecError {
    #[error("codec leak: {codec} record `{id}` found in the {side} set")]
    CodecLeak {
        codec: Codec,
        id: String,
        side: &'static str,
    },
    #[error("unknown phase {0} (built-in phases are 1 to 7)")]
    UnknownPhase(u8),
    #[error("invalid phase: {0}")]
    InvalidPhase(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("cross-codec predictions are constant; calibration undefined")]
    ConstantPredictions,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no {what} records left after filtering")]
    Empty { what: &'static str },
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
}

/// Training codecs, verification codec and decoder scope of one experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseConfig {
    /// Built-in preset number, absent for custom phases.
    pub phase_id: Option<u8>,
    pub training_codecs: Vec<Codec>,
    pub verification_codec: Codec,
    pub decoder_scope: DecoderScope,
}

const PRESETS: [&[Codec]; 7] = [
    &[Codec::Avc],
    &[Codec::Hevc],
    &[Codec::Vp9],
    &[Codec::Avc, Codec::Hevc],
    &[Codec::Avc, Codec::Vp9],
    &[Codec::Avc, Codec::Hevc, Codec::Vp9],
    &[Codec::Hevc, Codec::Vp9],
];

impl PhaseConfig {
    /// Built-in phases 1 to 7, all verified on AV1.
    pub fn preset(phase_id: u8, decoder_scope: DecoderScope) -> Result<Self, CrossCodecError> {
        let codecs = PRESETS
            .get((phase_id as usize).wrapping_sub(1))
            .ok_or(CrossCodecError::UnknownPhase(phase_id))?;
        Ok(PhaseConfig {
            phase_id: Some(phase_id),
            training_codecs: codecs.to_vec(),
            verification_codec: Codec::Av1,
            decoder_scope,
        })
    }

    pub fn custom(
        training_codecs: &[Codec],
        verification_codec: Codec,
        decoder_scope: DecoderScope,
    ) -> Result<Self, CrossCodecError> {
        let mut codecs = training_codecs.to_vec();
        codecs.sort();
        codecs.dedup();
        let config = PhaseConfig {
            phase_id: None,
            training_codecs: codecs,
            verification_codec,
            decoder_scope,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CrossCodecError> {
        if self.training_codecs.is_empty() {
            return Err(CrossCodecError::InvalidPhase("no training codecs".into()));
        }
        if self.training_codecs.contains(&self.verification_codec) {
            return Err(CrossCodecError::InvalidPhase(format!(
                "verification codec {} is also a training codec",
                self.verification_codec
            )));
        }
        Ok(())
    }

    /// e.g. `HEVC+VP9 -> AV1`.
    pub fn describe(&self) -> String {
        let train: Vec<&str> = self.training_codecs.iter().map(|c| c.as_str()).collect();
        format!("{} -> {}", train.join("+"), self.verification_codec)
    }
}

/// `Ê_veri = alpha + beta·Ê_cross`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub alpha: f64,
    pub beta: f64,
}

impl CalibrationParams {
    pub const IDENTITY: CalibrationParams = CalibrationParams {
        alpha: 0.0,
        beta: 1.0,
    };
}

/// Ordinary least squares of `measured` on `predicted`.
pub fn fit_calibration(
    predicted: &[f64],
    measured: &[f64],
) -> Result<CalibrationParams, CrossCodecError> {
    if predicted.len() != measured.len() {
        return Err(CrossCodecError::LengthMismatch {
            left: predicted.len(),
            right: measured.len(),
        });
    }
    let n = predicted.len();
    if n < 2 {
        return Err(CrossCodecError::TooFewSamples { needed: 2, got: n });
    }
    let mx = predicted.iter().sum::<f64>() / n as f64;
    let my = measured.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in predicted.iter().zip(measured) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let scale = predicted.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(sxx > (1e-12 * scale).powi(2) * n as f64) {
        return Err(CrossCodecError::ConstantPredictions);
    }
    let beta = sxy / sxx;
    Ok(CalibrationParams {
        alpha: my - beta * mx,
        beta,
    })
}

pub fn apply_calibration(params: CalibrationParams, predicted: &[f64]) -> Vec<f64> {
    predicted
        .iter()
        .map(|x| params.alpha + params.beta * x)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCodecReport {
    pub phase: PhaseConfig,
    pub kind: FeatureSetKind,
    pub regressor: Regressor,
    pub seed: u64,
    /// Decoder kind of the verification records scored here.
    pub verification_decoder_kind: DecoderKind,
    pub n_train: usize,
    pub ids: Vec<String>,
    pub raw_predictions: Vec<f64>,
    pub calibrated: Vec<f64>,
    pub measured: Vec<f64>,
    pub pcc_raw: f64,
    pub mape_calibrated: f64,
    pub calibration: CalibrationParams,
}

impl CrossCodecReport {
    #[allow(clippy::too_many_arguments)]
    fn build(
        phase: &PhaseConfig,
        kind: FeatureSetKind,
        regressor: Regressor,
        seed: u64,
        verification_decoder_kind: DecoderKind,
        n_train: usize,
        ids: Vec<String>,
        raw_predictions: Vec<f64>,
        measured: Vec<f64>,
    ) -> Result<Self, CrossCodecError> {
        let calibration = fit_calibration(&raw_predictions, &measured)?;
        let calibrated = apply_calibration(calibration, &raw_predictions);
        Ok(CrossCodecReport {
            phase: phase.clone(),
            kind,
            regressor,
            seed,
            verification_decoder_kind,
            n_train,
            pcc_raw: pearson(&raw_predictions, &measured)?,
            mape_calibrated: mape(&measured, &calibrated)?,
            ids,
            raw_predictions,
            calibrated,
            measured,
            calibration,
        })
    }
}

fn check_leaks(
    train: &Dataset,
    verify: &Dataset,
    phase: &PhaseConfig,
) -> Result<(), CrossCodecError> {
    if let Some(r) = train
        .records
        .iter()
        .find(|r| r.codec == phase.verification_codec)
    {
        return Err(CrossCodecError::CodecLeak {
            codec: r.codec,
            id: r.id.clone(),
            side: "training",
        });
    }
    if let Some(r) = verify
        .records
        .iter()
        .find(|r| phase.training_codecs.contains(&r.codec))
    {
        return Err(CrossCodecError::CodecLeak {
            codec: r.codec,
            id: r.id.clone(),
            side: "verification",
        });
    }
    Ok(())
}

/// Trains one model on the phase's training records and verifies it per
/// verification decoder kind, reference before optimized.
pub fn run_phase(
    train: &Dataset,
    verify: &Dataset,
    phase: &PhaseConfig,
    kind: FeatureSetKind,
    regressor: Regressor,
    seed: u64,
) -> Result<Vec<CrossCodecReport>, CrossCodecError> {
    phase.validate()?;
    check_leaks(train, verify, phase)?;
    let train = train.filtered(|r| {
        phase.training_codecs.contains(&r.codec) && phase.decoder_scope.includes(r.decoder_kind)
    });
    let verify = verify.filtered(|r| {
        r.codec == phase.verification_codec && phase.decoder_scope.includes(r.decoder_kind)
    });
    if train.is_empty() {
        return Err(CrossCodecError::Empty { what: "training" });
    }
    if verify.is_empty() {
        return Err(CrossCodecError::Empty {
            what: "verification",
        });
    }
    let missing = verify.missing(kind, Some(EnergyTarget::EnergyHw));
    if !missing.is_empty() {
        return Err(RegressionError::MissingFeature {
            kind,
            target: Some(EnergyTarget::EnergyHw),
            ids: missing,
        }
        .into());
    }

    let (features, targets) = training_data(&train, kind, EnergyTarget::EnergyHw)?;
    let model = EnergyModel::fit(regressor, &features, &targets, seed)?;

    let mut reports = Vec::new();
    for &decoder_kind in DecoderKind::ALL {
        let group: Vec<_> = verify
            .records
            .iter()
            .filter(|r| r.decoder_kind == decoder_kind)
            .collect();
        if group.is_empty() {
            continue;
        }
        if group.len() < 2 {
            return Err(CrossCodecError::TooFewSamples {
                needed: 2,
                got: group.len(),
            });
        }
        let mut ids = Vec::with_capacity(group.len());
        let mut raw = Vec::with_capacity(group.len());
        let mut measured = Vec::with_capacity(group.len());
        for r in group {
            let row = r.features(kind).expect("checked above");
            raw.push(model.predict(&row)?);
            measured.push(r.energy(EnergyTarget::EnergyHw).expect("checked above"));
            ids.push(r.id.clone());
        }
        reports.push(CrossCodecReport::build(
            phase,
            kind,
            regressor,
            seed,
            decoder_kind,
            train.len(),
            ids,
            raw,
            measured,
        )?);
    }
    Ok(reports)
}

fn decoder_label(kind: DecoderKind) -> &'static str {
    match kind {
        DecoderKind::Reference => "Ref.",
        DecoderKind::Optimized => "Opt.",
    }
}

/// Calibrated MAPE per phase and verification decoder kind, one column per feature set.
pub fn phase_table(reports: &[CrossCodecReport]) -> String {
    let mut rows: Vec<(String, DecoderKind, &PhaseConfig)> = Vec::new();
    for r in reports {
        let key = r.phase.describe();
        if !rows
            .iter()
            .any(|(k, d, _)| *k == key && *d == r.verification_decoder_kind)
        {
            rows.push((key, r.verification_decoder_kind, &r.phase));
        }
    }
    let labels: Vec<String> = rows
        .iter()
        .map(|(desc, d, p)| {
            let id = p
                .phase_id
                .map(|i| i.to_string())
                .unwrap_or_else(|| "-".into());
            format!("{id:>2}  {desc} {}", decoder_label(*d))
        })
        .collect();
    let width = labels.iter().map(String::len).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = write!(out, "{:<width$}", "Phase");
    for k in FeatureSetKind::ALL {
        let _ = write!(out, "  {:>14}", k.title());
    }
    out.push('\n');
    for ((desc, d, _), label) in rows.iter().zip(&labels) {
        let _ = write!(out, "{label:<width$}");
        for &k in FeatureSetKind::ALL {
            let cell = reports
                .iter()
                .find(|r| {
                    r.phase.describe() == *desc && r.verification_decoder_kind == *d && r.kind == k
                })
                .map(|r| percent(r.mape_calibrated))
                .unwrap_or_else(|| "-".into());
            let _ = write!(out, "  {cell:>14}");
        }
        out.push('\n');
    }
    out
}

/// One line per verification bitstream: measured, raw and calibrated estimates.
pub fn scatter_csv(reports: &[CrossCodecReport]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "id",
        "phase",
        "kind",
        "regressor",
        "decoder_kind",
        "e_veri",
        "e_cross",
        "e_veri_hat",
    ])?;
    for r in reports {
        for i in 0..r.ids.len() {
            w.write_record([
                r.ids[i].clone(),
                r.phase.describe(),
                r.kind.to_string(),
                r.regressor.to_string(),
                r.verification_decoder_kind.to_string(),
                r.measured[i].to_string(),
                r.raw_predictions[i].to_string(),
                r.calibrated[i].to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::{generate, CodecSpec, GeneratorSpec};
    use proptest::prelude::*;

    #[test]
    fn presets_follow_the_phase_table() {
        use Codec::*;
        let expected: [&[Codec]; 7] = [
            &[Avc],
            &[Hevc],
            &[Vp9],
            &[Avc, Hevc],
            &[Avc, Vp9],
            &[Avc, Hevc, Vp9],
            &[Hevc, Vp9],
        ];
        for (i, codecs) in expected.iter().enumerate() {
            let p = PhaseConfig::preset(i as u8 + 1, DecoderScope::Both).unwrap();
            assert_eq!(p.training_codecs, codecs.to_vec());
            assert_eq!(p.verification_codec, Av1);
            p.validate().unwrap();
        }
        assert!(matches!(
            PhaseConfig::preset(8, DecoderScope::Both),
            Err(CrossCodecError::UnknownPhase(8))
        ));
        assert!(matches!(
            PhaseConfig::preset(0, DecoderScope::Both),
            Err(CrossCodecError::UnknownPhase(0))
        ));
        assert!(PhaseConfig::custom(&[Av1, Vp9], Av1, DecoderScope::Both).is_err());
    }

    #[test]
    fn calibration_identities() {
        let x = [1.0, 2.0, 4.0, 7.5];
        let c = fit_calibration(&x, &x).unwrap();
        assert!(c.alpha.abs() < 1e-10 && (c.beta - 1.0).abs() < 1e-10);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 5.0).collect();
        let c = fit_calibration(&x, &y).unwrap();
        assert!((c.alpha - 5.0).abs() < 1e-10 && (c.beta - 2.0).abs() < 1e-10);
        assert_eq!(
            apply_calibration(
                CalibrationParams {
                    alpha: 5.0,
                    beta: 2.0
                },
                &[1.0, 2.0]
            ),
            vec![7.0, 9.0]
        );
        assert_eq!(
            apply_calibration(CalibrationParams::IDENTITY, &x),
            x.to_vec()
        );
        assert!(matches!(
            fit_calibration(&[3.0; 4], &x),
            Err(CrossCodecError::ConstantPredictions)
        ));
        assert!(matches!(
            fit_calibration(&[1.0], &[1.0]),
            Err(CrossCodecError::TooFewSamples { .. })
        ));
        assert!(matches!(
            fit_calibration(&[1.0, 2.0], &[1.0]),
            Err(CrossCodecError::LengthMismatch { .. })
        ));
    }

    fn corpus(noise: f64) -> Dataset {
        generate(&GeneratorSpec {
            noise_sigma_relative: noise,
            ..GeneratorSpec::default()
        })
        .unwrap()
        .0
    }

    #[test]
    fn planted_transform_is_recovered() {
        let ds = corpus(0.0);
        let phase = PhaseConfig::preset(7, DecoderScope::Both).unwrap();
        let train = ds.filtered(|r| r.codec != Codec::Av1);
        let verify = ds.filtered(|r| r.codec == Codec::Av1);
        let reports = run_phase(
            &train,
            &verify,
            &phase,
            FeatureSetKind::Valgrind13Pe,
            Regressor::Lr,
            42,
        )
        .unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_eq!(r.verification_decoder_kind, DecoderKind::Optimized);
        assert!(r.pcc_raw >= 0.999);
        assert!((r.calibration.alpha - 3.0).abs() <= 0.03);
        assert!((r.calibration.beta - 2.0).abs() <= 0.02);
        assert!((r.pcc_raw - pearson(&r.raw_predictions, &r.measured).unwrap()).abs() <= 1e-12);
        assert!((r.mape_calibrated - mape(&r.measured, &r.calibrated).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn leaks_are_rejected() {
        let ds = corpus(0.01);
        let phase = PhaseConfig::preset(7, DecoderScope::Both).unwrap();
        let verify = ds.filtered(|r| r.codec == Codec::Av1);
        let err = run_phase(
            &ds,
            &verify,
            &phase,
            FeatureSetKind::Temporal,
            Regressor::Lr,
            1,
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                CrossCodecError::CodecLeak {
                    side: "training",
                    ..
                }
            ),
            "{err}"
        );
        let train = ds.filtered(|r| r.codec != Codec::Av1);
        let err = run_phase(
            &train,
            &ds.filtered(|r| r.codec != Codec::Avc),
            &phase,
            FeatureSetKind::Temporal,
            Regressor::Lr,
            1,
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                CrossCodecError::CodecLeak {
                    side: "verification",
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn single_verification_record_is_too_few() {
        let ds = corpus(0.01);
        let phase = PhaseConfig::preset(2, DecoderScope::Both).unwrap();
        let train = ds.filtered(|r| r.codec == Codec::Hevc);
        let verify = Dataset::new(
            vec![ds
                .records
                .iter()
                .find(|r| r.codec == Codec::Av1)
                .unwrap()
                .clone()],
            "one",
        );
        let err = run_phase(
            &train,
            &verify,
            &phase,
            FeatureSetKind::PerfCtc,
            Regressor::Lr,
            1,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            CrossCodecError::TooFewSamples { needed: 2, got: 1 }
        ));
    }

    #[test]
    fn reference_and_optimized_are_reported_separately() {
        let mut reference = CodecSpec::optimized(Codec::Av1, "aomdec", 30, 3.0);
        reference.decoder_kind = DecoderKind::Reference;
        let mut spec = GeneratorSpec::default();
        spec.codecs.push(reference);
        let ds = generate(&spec).unwrap().0;
        let phase = PhaseConfig::preset(6, DecoderScope::Both).unwrap();
        let reports = run_phase(
            &ds.filtered(|r| r.codec != Codec::Av1),
            &ds.filtered(|r| r.codec == Codec::Av1),
            &phase,
            FeatureSetKind::Temporal,
            Regressor::Lr,
            1,
        )
        .unwrap();
        let kinds: Vec<DecoderKind> = reports
            .iter()
            .map(|r| r.verification_decoder_kind)
            .collect();
        assert_eq!(kinds, vec![DecoderKind::Reference, DecoderKind::Optimized]);
        assert_eq!(reports[0].ids.len(), 30);
        let table = phase_table(&reports);
        assert!(table.contains("AVC+HEVC+VP9 -> AV1 Ref."), "{table}");
        assert!(table.contains("Opt."));
        let csv = scatter_csv(&reports).unwrap();
        assert_eq!(csv.lines().count(), 1 + 30 + 100);
    }

    proptest! {
        #[test]
        fn least_squares_beats_any_grid_point(
            pairs in proptest::collection::vec((0.5f64..20.0, -1.0f64..1.0), 3..25),
            a in -2.0f64..2.0,
            b in 0.2f64..3.0,
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| a + b * p.0 + p.1).collect();
            prop_assume!(fit_calibration(&x, &y).is_ok());
            let fit = fit_calibration(&x, &y).unwrap();
            let sse = |c: CalibrationParams| apply_calibration(c, &x).iter().zip(&y).map(|(e, m)| (e - m).powi(2)).sum::<f64>();
            let best = sse(fit);
            for i in 0..=20 {
                for j in 0..=20 {
                    let c = CalibrationParams { alpha: -4.0 + 0.4 * i as f64, beta: 0.2 * j as f64 };
                    prop_assert!(best <= sse(c) * (1.0 + 1e-12) + 1e-12);
                }
            }
        }

        #[test]
        fn calibration_keeps_correlation(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..30),
            alpha in -50.0f64..50.0,
            beta in 0.01f64..20.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assume!(pearson(&x, &y).is_ok());
            let z = apply_calibration(CalibrationParams { alpha, beta }, &x);
            prop_assert!((pearson(&z, &y).unwrap() - pearson(&x, &y).unwrap()).abs() <= 1e-12);
        }
    }
}
