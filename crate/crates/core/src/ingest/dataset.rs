//! Dataset CSV and JSON files.
//!
//! One row per bitstream; an empty cell (or a JSON `null`) marks an absent
//! optional value. The CSV writer prefixes a `# provenance: "<json string>"`
//! comment line and appends four columns carrying energy-sample metadata
//! (`energy_*_repeats`, `energy_*_confident`); readers accept files without them.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::types::{
    BitstreamRecord, Dataset, EnergySample, MeasurementSetup, PerfCtcFeatures,
    ProcessorEventVector, TemporalFeature,
};

/// Canonical column order of the dataset CSV.
pub const CSV_COLUMNS: [&str; 27] = [
    "id",
    "codec",
    "decoder_name",
    "decoder_kind",
    "sequence",
    "class",
    "qp",
    "condition",
    "t_dec_sw",
    "perf_instructions",
    "perf_cycles",
    "perf_user_time",
    "ir",
    "dr",
    "dw",
    "i1mr",
    "d1mr",
    "d1mw",
    "ilmr",
    "dlmr",
    "dlmw",
    "bc",
    "bcm",
    "bi",
    "bim",
    "energy_sw_j",
    "energy_hw_j",
];

const PROVENANCE_PREFIX: &str = "# provenance: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Json,
}

impl DatasetFormat {
    /// `.json` files are JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => DatasetFormat::Json,
            _ => DatasetFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct DatasetRow {
    id: String,
    codec: String,
    decoder_name: String,
    decoder_kind: String,
    sequence: String,
    class: String,
    qp: i32,
    condition: String,
    #[serde(default)]
    t_dec_sw: Option<f64>,
    #[serde(default)]
    perf_instructions: Option<u64>,
    #[serde(default)]
    perf_cycles: Option<u64>,
    #[serde(default)]
    perf_user_time: Option<f64>,
    #[serde(default)]
    ir: Option<u64>,
    #[serde(default)]
    dr: Option<u64>,
    #[serde(default)]
    dw: Option<u64>,
    #[serde(default)]
    i1mr: Option<u64>,
    #[serde(default)]
    d1mr: Option<u64>,
    #[serde(default)]
    d1mw: Option<u64>,
    #[serde(default)]
    ilmr: Option<u64>,
    #[serde(default)]
    dlmr: Option<u64>,
    #[serde(default)]
    dlmw: Option<u64>,
    #[serde(default)]
    bc: Option<u64>,
    #[serde(default)]
    bcm: Option<u64>,
    #[serde(default)]
    bi: Option<u64>,
    #[serde(default)]
    bim: Option<u64>,
    #[serde(default)]
    energy_sw_j: Option<f64>,
    #[serde(default)]
    energy_hw_j: Option<f64>,
    #[serde(default)]
    energy_sw_repeats: Option<u32>,
    #[serde(default)]
    energy_sw_confident: Option<bool>,
    #[serde(default)]
    energy_hw_repeats: Option<u32>,
    #[serde(default)]
    energy_hw_confident: Option<bool>,
}

impl DatasetRow {
    fn from_record(r: &BitstreamRecord) -> Self {
        let pe = r
            .valgrind
            .map(|v| v.to_array().map(Some))
            .unwrap_or([None; 13]);
        DatasetRow {
            id: r.id.clone(),
            codec: r.codec.to_string(),
            decoder_name: r.decoder_name.clone(),
            decoder_kind: r.decoder_kind.to_string(),
            sequence: r.sequence.clone(),
            class: r.class_label.to_string(),
            qp: r.qp,
            condition: r.condition.to_string(),
            t_dec_sw: r.temporal.map(|t| t.t_dec_sw),
            perf_instructions: r.perf.map(|p| p.instructions),
            perf_cycles: r.perf.map(|p| p.cycles),
            perf_user_time: r.perf.map(|p| p.user_time),
            ir: pe[0],
            dr: pe[1],
            dw: pe[2],
            i1mr: pe[3],
            d1mr: pe[4],
            d1mw: pe[5],
            ilmr: pe[6],
            dlmr: pe[7],
            dlmw: pe[8],
            bc: pe[9],
            bcm: pe[10],
            bi: pe[11],
            bim: pe[12],
            energy_sw_j: r.energy_sw.map(|e| e.joules),
            energy_hw_j: r.energy_hw.map(|e| e.joules),
            energy_sw_repeats: r.energy_sw.map(|e| e.n_repeats),
            energy_sw_confident: r.energy_sw.map(|e| e.passed_confidence),
            energy_hw_repeats: r.energy_hw.map(|e| e.n_repeats),
            energy_hw_confident: r.energy_hw.map(|e| e.passed_confidence),
        }
    }

    fn into_record(self, row: usize) -> Result<BitstreamRecord, IngestError> {
        let schema = |e: crate::types::UnknownVariant| IngestError::SchemaViolation {
            row,
            message: e.to_string(),
        };
        let pe = [
            self.ir, self.dr, self.dw, self.i1mr, self.d1mr, self.d1mw, self.ilmr, self.dlmr,
            self.dlmw, self.bc, self.bcm, self.bi, self.bim,
        ];
        let present = pe.iter().filter(|c| c.is_some()).count();
        let valgrind = match present {
            0 => None,
            13 => Some(ProcessorEventVector::from_array(
                pe.map(|c| c.unwrap_or_default()),
            )),
            _ => {
                return Err(IngestError::RowParse {
                    row,
                    message: format!(
                        "processor event vector partially present ({present} of 13 columns)"
                    ),
                })
            }
        };
        let perf = match (
            self.perf_instructions,
            self.perf_cycles,
            self.perf_user_time,
        ) {
            (None, None, None) => None,
            (Some(instructions), Some(cycles), Some(user_time)) => Some(PerfCtcFeatures {
                instructions,
                cycles,
                user_time,
            }),
            _ => {
                return Err(IngestError::RowParse {
                    row,
                    message: "perf features partially present".into(),
                })
            }
        };
        let sample = |joules: Option<f64>, repeats: Option<u32>, confident: Option<bool>, setup| {
            joules.map(|joules| EnergySample {
                joules,
                setup,
                n_repeats: repeats.unwrap_or(1),
                passed_confidence: confident.unwrap_or(false),
            })
        };
        let record = BitstreamRecord {
            id: self.id,
            codec: self.codec.parse().map_err(schema)?,
            decoder_name: self.decoder_name,
            decoder_kind: self.decoder_kind.parse().map_err(schema)?,
            sequence: self.sequence,
            class_label: self.class.parse().map_err(schema)?,
            qp: self.qp,
            condition: self.condition.parse().map_err(schema)?,
            temporal: self.t_dec_sw.map(|t_dec_sw| TemporalFeature { t_dec_sw }),
            perf,
            valgrind,
            energy_sw: sample(
                self.energy_sw_j,
                self.energy_sw_repeats,
                self.energy_sw_confident,
                MeasurementSetup::Software,
            ),
            energy_hw: sample(
                self.energy_hw_j,
                self.energy_hw_repeats,
                self.energy_hw_confident,
                MeasurementSetup::Hardware,
            ),
        };
        record
            .validate()
            .map_err(|e| IngestError::RowParse { row, message: e.0 })?;
        Ok(record)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonDocument {
    Rows(Vec<DatasetRow>),
    Wrapped {
        #[serde(default)]
        provenance: String,
        records: Vec<DatasetRow>,
    },
}

#[derive(Serialize)]
struct JsonDocumentOut<'a> {
    provenance: &'a str,
    records: Vec<DatasetRow>,
}

fn finish(rows: Vec<DatasetRow>, provenance: String) -> Result<Dataset, IngestError> {
    let records = rows
        .into_iter()
        .enumerate()
        .map(|(i, row)| row.into_record(i + 1))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = Dataset::new(records, provenance);
    if let Some(id) = dataset.duplicate_id() {
        return Err(IngestError::DuplicateId { id: id.to_owned() });
    }
    Ok(dataset)
}

fn load_csv(text: &str) -> Result<Dataset, IngestError> {
    let provenance = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix(PROVENANCE_PREFIX))
        .map(|p| serde_json::from_str::<String>(p).unwrap_or_else(|_| p.to_owned()))
        .unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, row) in reader.deserialize::<DatasetRow>().enumerate() {
        rows.push(row.map_err(|e| IngestError::RowParse {
            row: i + 1,
            message: e.to_string(),
        })?);
    }
    finish(rows, provenance)
}

fn load_json(text: &str) -> Result<Dataset, IngestError> {
    match serde_json::from_str::<JsonDocument>(text)? {
        JsonDocument::Rows(rows) => finish(rows, String::new()),
        JsonDocument::Wrapped {
            provenance,
            records,
        } => finish(records, provenance),
    }
}

/// Parses and validates a dataset document.
pub fn load_dataset(text: &str, format: DatasetFormat) -> Result<Dataset, IngestError> {
    match format {
        DatasetFormat::Csv => load_csv(text),
        DatasetFormat::Json => load_json(text),
    }
}

pub fn load_dataset_file(path: &Path) -> Result<Dataset, IngestError> {
    let text = std::fs::read_to_string(path)?;
    load_dataset(&text, DatasetFormat::from_path(path))
}

pub fn write_dataset_csv<W: Write>(dataset: &Dataset, mut out: W) -> Result<(), IngestError> {
    if !dataset.provenance.is_empty() {
        writeln!(
            out,
            "{PROVENANCE_PREFIX}{}",
            serde_json::to_string(&dataset.provenance)?
        )?;
    }
    let mut writer = csv::Writer::from_writer(out);
    if dataset.records.is_empty() {
        let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
        header.extend([
            "energy_sw_repeats",
            "energy_sw_confident",
            "energy_hw_repeats",
            "energy_hw_confident",
        ]);
        writer
            .write_record(header)
            .map_err(|e| IngestError::Csv(e.to_string()))?;
    }
    for record in &dataset.records {
        writer
            .serialize(DatasetRow::from_record(record))
            .map_err(|e| IngestError::Csv(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_dataset_json<W: Write>(dataset: &Dataset, out: W) -> Result<(), IngestError> {
    let doc = JsonDocumentOut {
        provenance: &dataset.provenance,
        records: dataset
            .records
            .iter()
            .map(DatasetRow::from_record)
            .collect(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::*;
    use proptest::prelude::*;

    const HEADER: &str = "id,codec,decoder_name,decoder_kind,sequence,class,qp,condition,t_dec_sw,perf_instructions,perf_cycles,perf_user_time,ir,dr,dw,i1mr,d1mr,d1mw,ilmr,dlmr,dlmw,bc,bcm,bi,bim,energy_sw_j,energy_hw_j";

    #[test]
    fn two_row_csv() {
        let text = format!(
            "{HEADER}\n\
             a,HEVC,ffmpeg,optimized,Seq1,A1,32,RA,1.5,100,200,1.4,1000,300,200,10,5,4,2,1,1,150,20,30,6,12.5,0.8\n\
             b,AVM,avmdec,reference,Seq2,B,110,LB,2.0,,,,,,,,,,,,,,,,,20.0,\n"
        );
        let ds = load_dataset(&text, DatasetFormat::Csv).unwrap();
        assert_eq!(ds.len(), 2);
        let a = &ds.records[0];
        assert_eq!(a.valgrind.unwrap().bim, 6);
        assert_eq!(a.perf.unwrap().cycles, 200);
        assert_eq!(a.energy_hw.unwrap().joules, 0.8);
        let b = &ds.records[1];
        assert_eq!(b.codec, Codec::Avm);
        assert!(b.valgrind.is_none() && b.perf.is_none() && b.energy_hw.is_none());
        assert_eq!(b.temporal.unwrap().t_dec_sw, 2.0);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = format!(
            "{HEADER}\n\
             a,HEVC,x,optimized,S,A1,32,RA,1.5,,,,,,,,,,,,,,,,,1,\n\
             a,HEVC,x,optimized,S,A1,37,RA,1.2,,,,,,,,,,,,,,,,,1,\n"
        );
        assert!(matches!(
            load_dataset(&text, DatasetFormat::Csv),
            Err(IngestError::DuplicateId { id }) if id == "a"
        ));
    }

    #[test]
    fn unknown_codec_is_schema_violation() {
        let text = format!("{HEADER}\na,H266,x,optimized,S,A1,32,RA,1.5,,,,,,,,,,,,,,,,,1,\n");
        assert!(matches!(
            load_dataset(&text, DatasetFormat::Csv),
            Err(IngestError::SchemaViolation { row: 1, .. })
        ));
    }

    #[test]
    fn bad_number_reports_row() {
        let text = format!(
            "{HEADER}\n\
             a,HEVC,x,optimized,S,A1,32,RA,1.5,,,,,,,,,,,,,,,,,1,\n\
             b,HEVC,x,optimized,S,A1,thirty,RA,1.5,,,,,,,,,,,,,,,,,1,\n"
        );
        assert!(matches!(
            load_dataset(&text, DatasetFormat::Csv),
            Err(IngestError::RowParse { row: 2, .. })
        ));
    }

    #[test]
    fn json_mirror_accepts_bare_rows() {
        let text = r#"[{"id":"a","codec":"VP9","decoder_name":"libvpx","decoder_kind":"reference",
            "sequence":"S","class":"A2","qp":40,"condition":"RA","t_dec_sw":0.5,"energy_hw_j":1.25}]"#;
        let ds = load_dataset(text, DatasetFormat::Json).unwrap();
        assert_eq!(ds.records[0].class_label, SequenceClass::A2);
        assert_eq!(ds.records[0].energy(EnergyTarget::EnergyHw), Some(1.25));
    }

    fn arb_record(i: usize) -> impl Strategy<Value = BitstreamRecord> {
        (
            proptest::sample::select(Codec::ALL.to_vec()),
            any::<bool>(),
            proptest::option::of(0.0f64..1e4),
            proptest::option::of((any::<u32>(), any::<u32>(), 0.0f64..1e3)),
            proptest::option::of(proptest::array::uniform13(0u64..1_000_000)),
            proptest::option::of((0.0f64..1e3, 1u32..20, any::<bool>())),
            proptest::option::of((0.0f64..1e3, 1u32..20, any::<bool>())),
            -5i32..300,
        )
            .prop_map(move |(codec, opt, t, perf, pe, sw, hw, qp)| {
                let valgrind = pe.map(|mut c| {
                    // enforce the miss hierarchy
                    for (miss, access) in [
                        (3, 0),
                        (4, 1),
                        (5, 2),
                        (6, 3),
                        (7, 4),
                        (8, 5),
                        (10, 9),
                        (12, 11),
                    ] {
                        c[miss] = c[miss].min(c[access]);
                    }
                    ProcessorEventVector::from_array(c)
                });
                let temporal = if t.is_none() && perf.is_none() && valgrind.is_none() {
                    Some(TemporalFeature { t_dec_sw: 1.0 })
                } else {
                    t.map(|t_dec_sw| TemporalFeature { t_dec_sw })
                };
                BitstreamRecord {
                    id: format!("rec-{i}"),
                    codec,
                    decoder_name: "dec, \"quoted\"".into(),
                    decoder_kind: if opt {
                        DecoderKind::Optimized
                    } else {
                        DecoderKind::Reference
                    },
                    sequence: format!("seq {i}"),
                    class_label: SequenceClass::ALL[i % 4],
                    qp,
                    condition: CodingCondition::LowDelay,
                    temporal,
                    perf: perf.map(|(a, b, u)| PerfCtcFeatures {
                        instructions: a as u64 * 7,
                        cycles: b as u64,
                        user_time: u,
                    }),
                    valgrind,
                    energy_sw: sw.map(|(j, n, p)| EnergySample {
                        joules: j,
                        setup: MeasurementSetup::Software,
                        n_repeats: n,
                        passed_confidence: p,
                    }),
                    energy_hw: hw.map(|(j, n, p)| EnergySample {
                        joules: j,
                        setup: MeasurementSetup::Hardware,
                        n_repeats: n,
                        passed_confidence: p,
                    }),
                }
            })
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        (1usize..6)
            .prop_flat_map(|n| (0..n).map(arb_record).collect::<Vec<_>>())
            .prop_map(|records| Dataset::new(records, "synthetic\nmultiline, provenance"))
    }

    proptest! {
        #[test]
        fn csv_round_trip(ds in arb_dataset()) {
            let mut buf = Vec::new();
            write_dataset_csv(&ds, &mut buf).unwrap();
            let back = load_dataset(std::str::from_utf8(&buf).unwrap(), DatasetFormat::Csv).unwrap();
            prop_assert_eq!(back, ds);
        }

        #[test]
        fn json_round_trip(ds in arb_dataset()) {
            let mut buf = Vec::new();
            write_dataset_json(&ds, &mut buf).unwrap();
            let back = load_dataset(std::str::from_utf8(&buf).unwrap(), DatasetFormat::Json).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
