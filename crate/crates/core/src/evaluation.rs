//! Accuracy metrics and k-fold cross-validation.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::regression::{training_data, EnergyModel, FeatureMatrix, RegressionError, Regressor};
use crate::types::{Dataset, EnergyTarget, FeatureSetKind};

#[derive(Debug, thiserror::Error)]
pub enum EvaluationError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("measured energy at index {index} is not positive")]
    ZeroMeasurement { index: usize },
    #[error("input is constant; correlation undefined")]
    ConstantInput,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: RegressionError,
    },
    #[error(transparent)]
    Regression(#[from] RegressionError),
}

/// Mean absolute percentage error, as a fraction.
pub fn mape(measured: &[f64], estimated: &[f64]) -> Result<f64, EvaluationError> {
    if measured.len() != estimated.len() {
        return Err(EvaluationError::LengthMismatch {
            left: measured.len(),
            right: estimated.len(),
        });
    }
    if measured.is_empty() {
        return Err(EvaluationError::TooFewSamples { needed: 1, got: 0 });
    }
    if let Some(index) = measured.iter().position(|m| !(*m > 0.0)) {
        return Err(EvaluationError::ZeroMeasurement { index });
    }
    let total: f64 = measured
        .iter()
        .zip(estimated)
        .map(|(m, e)| (m - e).abs() / m)
        .sum();
    Ok(total / measured.len() as f64)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvaluationError> {
    if x.len() != y.len() {
        return Err(EvaluationError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(EvaluationError::TooFewSamples { needed: 2, got: n });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvaluationError::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Seeded partition of `0..n` into `k` folds whose sizes differ by at most one.
///
/// Indices inside each fold are sorted.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvaluationError> {
    if k == 0 || n < k {
        return Err(EvaluationError::TooFewSamples {
            needed: k.max(1),
            got: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(deal(&order, k))
}

fn deal(order: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    for (pos, &idx) in order.iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    folds
}

pub fn kfold_split(
    dataset: &Dataset,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvaluationError> {
    kfold_indices(dataset.len(), k, seed)
}

/// Like [`kfold_split`], but records are grouped by `stratum` after shuffling so
/// every stratum is spread evenly over the folds.
pub fn kfold_split_stratified<K: Ord>(
    dataset: &Dataset,
    k: usize,
    seed: u64,
    stratum: impl Fn(&crate::types::BitstreamRecord) -> K,
) -> Result<Vec<Vec<usize>>, EvaluationError> {
    let n = dataset.len();
    if k == 0 || n < k {
        return Err(EvaluationError::TooFewSamples {
            needed: k.max(1),
            got: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|&i| stratum(&dataset.records[i]));
    Ok(deal(&order, k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold_index: usize,
    pub mape: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Group the report covers, e.g. a decoder name.
    pub label: String,
    pub mape: f64,
    pub pcc: f64,
    pub per_fold: Vec<FoldResult>,
    pub regressor: Regressor,
    pub kind: FeatureSetKind,
    pub target: EnergyTarget,
    pub seed: u64,
    /// Out-of-fold estimates in dataset order.
    pub predictions: Vec<f64>,
    pub measured: Vec<f64>,
}

/// Trains on the complement of each fold and scores the pooled out-of-fold predictions.
pub fn cross_validate(
    dataset: &Dataset,
    kind: FeatureSetKind,
    regressor: Regressor,
    target: EnergyTarget,
    k: usize,
    seed: u64,
) -> Result<EvaluationReport, EvaluationError> {
    let folds = kfold_split(dataset, k, seed)?;
    cross_validate_with_folds(dataset, kind, regressor, target, &folds, seed)
}

pub fn cross_validate_with_folds(
    dataset: &Dataset,
    kind: FeatureSetKind,
    regressor: Regressor,
    target: EnergyTarget,
    folds: &[Vec<usize>],
    seed: u64,
) -> Result<EvaluationReport, EvaluationError> {
    let (features, targets) = training_data(dataset, kind, target)?;
    let n = targets.len();
    let mut predictions = vec![f64::NAN; n];
    let mut per_fold = Vec::with_capacity(folds.len());

    for (fold_index, test) in folds.iter().enumerate() {
        let mut is_test = vec![false; n];
        for &i in test {
            is_test[i] = true;
        }
        let train: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
        let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| features.row(i)).collect();
        let train_targets: Vec<f64> = train.iter().map(|&i| targets[i]).collect();
        let fold_err = |source| EvaluationError::Fold {
            fold: fold_index,
            source,
        };
        let train_matrix = FeatureMatrix::from_rows(kind, &train_rows).map_err(fold_err)?;
        let model =
            EnergyModel::fit(regressor, &train_matrix, &train_targets, seed).map_err(fold_err)?;

        let mut fold_measured = Vec::with_capacity(test.len());
        let mut fold_estimated = Vec::with_capacity(test.len());
        for &i in test {
            let estimate = model.predict(&features.row(i)).map_err(fold_err)?;
            predictions[i] = estimate;
            fold_measured.push(targets[i]);
            fold_estimated.push(estimate);
        }
        per_fold.push(FoldResult {
            fold_index,
            mape: mape(&fold_measured, &fold_estimated)?,
            n_samples: test.len(),
        });
    }

    Ok(EvaluationReport {
        label: String::new(),
        mape: mape(&targets, &predictions)?,
        pcc: pearson(&targets, &predictions)?,
        per_fold,
        regressor,
        kind,
        target,
        seed,
        predictions,
        measured: targets,
    })
}

/// Formats a fraction as a percentage with two decimals.
pub fn percent(value: f64) -> String {
    format!("{:.2}%", 100.0 * value)
}

/// Rows are labels, columns the three feature sets; absent cells print as `-`.
pub fn mape_table(title: &str, reports: &[EvaluationReport]) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for r in reports {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    let kinds = FeatureSetKind::ALL;
    let width = labels
        .iter()
        .map(|l| l.len())
        .chain(["Average".len(), 8])
        .max()
        .unwrap_or(8);
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:<width$}", "Decoder");
    for k in kinds {
        let _ = write!(out, "  {:>14}", k.title());
    }
    out.push('\n');
    let cell = |label: &str, kind: FeatureSetKind| {
        reports
            .iter()
            .find(|r| r.label == label && r.kind == kind)
            .map(|r| r.mape)
    };
    for label in &labels {
        let _ = write!(out, "{label:<width$}");
        for &k in kinds {
            let text = cell(label, k).map(percent).unwrap_or_else(|| "-".into());
            let _ = write!(out, "  {text:>14}");
        }
        out.push('\n');
    }
    if labels.len() > 1 {
        let _ = write!(out, "{:<width$}", "Average");
        for &k in kinds {
            let values: Vec<f64> = labels.iter().filter_map(|l| cell(l, k)).collect();
            let text = if values.is_empty() {
                "-".to_owned()
            } else {
                percent(values.iter().sum::<f64>() / values.len() as f64)
            };
            let _ = write!(out, "  {text:>14}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::*;
    use proptest::prelude::*;

    #[test]
    fn mape_hand_example() {
        // (0.1 + 0.1) / 2
        let v = mape(&[10.0, 20.0], &[11.0, 18.0]).unwrap();
        assert!((v - 0.10).abs() < 1e-15);
        assert_eq!(mape(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn mape_errors() {
        assert!(matches!(
            mape(&[1.0, 0.0], &[1.0, 1.0]),
            Err(EvaluationError::ZeroMeasurement { index: 1 })
        ));
        assert!(matches!(
            mape(&[1.0], &[1.0, 1.0]),
            Err(EvaluationError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn pearson_extremes() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 1.3).collect();
        let up: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let down: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&x, &down).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            pearson(&x, &[1.0; 10]),
            Err(EvaluationError::ConstantInput)
        ));
    }

    #[test]
    fn folds_partition_with_remainder() {
        let folds = kfold_indices(23, 10, 5).unwrap();
        let mut sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 2, 2, 2, 2, 3, 3, 3]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());

        let even = kfold_indices(20, 10, 5).unwrap();
        assert!(even.iter().all(|f| f.len() == 2));
        assert_eq!(kfold_indices(20, 10, 5).unwrap(), even);
        assert_ne!(kfold_indices(20, 10, 6).unwrap(), even);
        assert!(matches!(
            kfold_indices(5, 10, 0),
            Err(EvaluationError::TooFewSamples { .. })
        ));
    }

    fn linear_dataset(n: usize) -> Dataset {
        let records = (0..n)
            .map(|i| {
                let t = 0.5 + i as f64 * 0.37 + ((i * 7) % 5) as f64 * 0.1;
                BitstreamRecord {
                    id: format!("b{i}"),
                    codec: Codec::Hevc,
                    decoder_name: "hm".into(),
                    decoder_kind: DecoderKind::Reference,
                    sequence: format!("s{}", i % 3),
                    class_label: SequenceClass::ALL[i % 4],
                    qp: 22 + (i as i32 % 4) * 5,
                    condition: CodingCondition::RandomAccess,
                    temporal: Some(TemporalFeature { t_dec_sw: t }),
                    perf: None,
                    valgrind: None,
                    energy_sw: Some(EnergySample {
                        joules: 12.0 * t + 1.5,
                        setup: MeasurementSetup::Software,
                        n_repeats: 3,
                        passed_confidence: true,
                    }),
                    energy_hw: None,
                }
            })
            .collect();
        Dataset::new(records, "test")
    }

    #[test]
    fn exact_linear_target_cross_validates_exactly() {
        let ds = linear_dataset(30);
        let report = cross_validate(
            &ds,
            FeatureSetKind::Temporal,
            Regressor::Lr,
            EnergyTarget::EnergySw,
            10,
            1,
        )
        .unwrap();
        assert!(report.mape <= 1e-6);
        assert_eq!(
            report.per_fold.iter().map(|f| f.n_samples).sum::<usize>(),
            30
        );
        assert!((report.pcc - 1.0).abs() < 1e-9);
    }

    #[test]
    fn leave_one_out() {
        let ds = linear_dataset(12);
        let report = cross_validate(
            &ds,
            FeatureSetKind::Temporal,
            Regressor::Lr,
            EnergyTarget::EnergySw,
            12,
            3,
        )
        .unwrap();
        assert!(report.per_fold.iter().all(|f| f.n_samples == 1));
    }

    #[test]
    fn missing_feature_names_records() {
        let mut ds = linear_dataset(12);
        ds.records[4].temporal = None;
        ds.records[4].perf = Some(PerfCtcFeatures {
            instructions: 1,
            cycles: 1,
            user_time: 0.1,
        });
        let err = cross_validate(
            &ds,
            FeatureSetKind::Temporal,
            Regressor::Lr,
            EnergyTarget::EnergySw,
            10,
            3,
        )
        .unwrap_err();
        assert!(err.to_string().contains("b4"), "{err}");
        let err = cross_validate(
            &ds,
            FeatureSetKind::Valgrind13Pe,
            Regressor::Lr,
            EnergyTarget::EnergySw,
            10,
            3,
        )
        .unwrap_err();
        assert!(err.to_string().contains("12 record(s)"), "{err}");
    }

    #[test]
    fn stratified_folds_spread_classes() {
        let ds = linear_dataset(40);
        let folds = kfold_split_stratified(&ds, 10, 2, |r| r.class_label).unwrap();
        for fold in &folds {
            let mut classes: Vec<SequenceClass> =
                fold.iter().map(|&i| ds.records[i].class_label).collect();
            classes.sort();
            classes.dedup();
            assert_eq!(classes.len(), 4);
        }
    }

    #[test]
    fn table_layout() {
        let ds = linear_dataset(20);
        let mut r = cross_validate(
            &ds,
            FeatureSetKind::Temporal,
            Regressor::Lr,
            EnergyTarget::EnergySw,
            10,
            1,
        )
        .unwrap();
        r.label = "HM".into();
        let table = mape_table("SW", &[r]);
        assert!(table.contains("Valgrind 13PE"));
        assert!(table.lines().nth(2).unwrap().starts_with("HM"));
        assert!(table.contains("0.00%"));
    }

    proptest! {
        #[test]
        fn mape_is_scale_invariant(
            pairs in proptest::collection::vec((0.1f64..100.0, 0.0f64..200.0), 1..30),
            c in 0.001f64..1000.0,
        ) {
            let (m, e): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = mape(&m, &e).unwrap();
            let ms: Vec<f64> = m.iter().map(|v| v * c).collect();
            let es: Vec<f64> = e.iter().map(|v| v * c).collect();
            prop_assert!((mape(&ms, &es).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
        }

        #[test]
        fn pearson_is_invariant_to_positive_affine_maps(
            xy in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..40),
            a in 0.01f64..100.0,
            b in -100.0f64..100.0,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
            prop_assume!(pearson(&x, &y).is_ok());
            let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            prop_assert!((pearson(&xa, &y).unwrap() - pearson(&x, &y).unwrap()).abs() <= 1e-12);
        }

        #[test]
        fn folds_are_disjoint_and_balanced(n in 1usize..200, k in 1usize..15, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let folds = kfold_indices(n, k, seed).unwrap();
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut all = folds.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
