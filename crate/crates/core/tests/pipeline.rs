use std::path::Path;

use hwdec_energy::benchgen::{generate, GeneratorSpec};
use hwdec_energy::crosscodec::{run_phase, PhaseConfig};
use hwdec_energy::ingest::{
    derive_decoding_energy, load_dataset, parse_callgrind, parse_measurement_csv, parse_perf_stat,
    write_dataset_csv, write_dataset_json, DatasetFormat, EnergyUnit,
};
use hwdec_energy::regression::training_data;
use hwdec_energy::regression::{EnergyModel, ModelFile, Regressor};
use hwdec_energy::types::{
    BitstreamRecord, Codec, CodingCondition, DecoderKind, DecoderScope, EnergyTarget,
    FeatureSetKind, MeasurementSetup, SequenceClass, TemporalFeature,
};

fn read(name: &str) -> String {
    std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/fixtures")
            .join(name),
    )
    .unwrap()
}

#[test]
fn fixture_record_round_trips_through_both_formats() {
    let (active, idle) =
        parse_measurement_csv(&read("energy_hevc_qp32.csv"), EnergyUnit::Joules).unwrap();
    let energy = derive_decoding_energy(&active, &idle, MeasurementSetup::Hardware).unwrap();
    assert!((energy.joules - 29.656).abs() < 1e-9);
    assert!(energy.passed_confidence);
    assert_eq!(energy.n_repeats, 5);

    let record = BitstreamRecord {
        id: "hevc-qp32".into(),
        codec: Codec::Hevc,
        decoder_name: "ffmpeg-hevc".into(),
        decoder_kind: DecoderKind::Optimized,
        sequence: "BasketballDrive".into(),
        class_label: SequenceClass::B,
        qp: 32,
        condition: CodingCondition::RandomAccess,
        temporal: Some(TemporalFeature { t_dec_sw: 1.4 }),
        perf: Some(parse_perf_stat(&read("perf_stat.csv")).unwrap()),
        valgrind: Some(parse_callgrind(&read("callgrind.out.hevc_qp32")).unwrap()),
        energy_sw: None,
        energy_hw: Some(energy),
    };
    let ds = hwdec_energy::types::Dataset::new(vec![record], "fixture");

    let mut csv = Vec::new();
    write_dataset_csv(&ds, &mut csv).unwrap();
    let back = load_dataset(std::str::from_utf8(&csv).unwrap(), DatasetFormat::Csv).unwrap();
    assert_eq!(back.records, ds.records);

    let mut json = Vec::new();
    write_dataset_json(&ds, &mut json).unwrap();
    let back = load_dataset(std::str::from_utf8(&json).unwrap(), DatasetFormat::Json).unwrap();
    assert_eq!(back.records, ds.records);
}

#[test]
fn saved_model_predicts_like_the_trained_one() {
    let mut spec = GeneratorSpec::default();
    for c in &mut spec.codecs {
        c.n_bitstreams = 25;
    }
    let (ds, _) = generate(&spec).unwrap();
    for &kind in FeatureSetKind::ALL.iter() {
        for reg in [Regressor::Lr, Regressor::Gpr] {
            let (x, y) = training_data(&ds, kind, EnergyTarget::EnergyHw).unwrap();
            let model = EnergyModel::fit(reg, &x, &y, 3).unwrap();
            let text = ModelFile::new(model.clone()).to_json_string().unwrap();
            let loaded = ModelFile::from_json_str(&text).unwrap().model;
            for i in 0..x.rows() {
                let row = x.row(i);
                assert_eq!(
                    model.predict(&row).unwrap(),
                    loaded.predict(&row).unwrap(),
                    "{kind:?} {reg:?}"
                );
            }
        }
    }
}

#[test]
fn every_preset_phase_runs_on_a_synthetic_corpus() {
    let mut spec = GeneratorSpec::default();
    for c in &mut spec.codecs {
        c.n_bitstreams = 20;
    }
    let (ds, _) = generate(&spec).unwrap();
    let train = ds.filtered(|r| r.codec != Codec::Av1);
    let verify = ds.filtered(|r| r.codec == Codec::Av1);
    for id in 1..=7 {
        let phase = PhaseConfig::preset(id, DecoderScope::Both).unwrap();
        let reports = run_phase(
            &train,
            &verify,
            &phase,
            FeatureSetKind::PerfCtc,
            Regressor::Lr,
            1,
        )
        .unwrap();
        assert_eq!(
            reports.iter().map(|r| r.ids.len()).sum::<usize>(),
            20,
            "phase {id}"
        );
        assert!(reports.iter().all(|r| r.mape_calibrated.is_finite()));
    }
}
