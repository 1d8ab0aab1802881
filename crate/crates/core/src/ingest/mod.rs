//! Parsers for profiler outputs, measurement logs and dataset files.

mod callgrind;
mod dataset;
mod measurement;
mod perf;

pub use callgrind::parse_callgrind;
pub use dataset::{
    load_dataset, load_dataset_file, write_dataset_csv, write_dataset_json, DatasetFormat,
    CSV_COLUMNS,
};
pub use measurement::{
    confidence_check, derive_decoding_energy, parse_measurement_csv, ConfidenceCheckResult,
    EnergyUnit, DEFAULT_CONFIDENCE, DEFAULT_MAX_DEVIATION,
};
pub use perf::{parse_perf_stat, parse_perf_stat_with_separator};

use crate::types::InvariantViolation;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error(
        "event `{event}` missing from `events:` header (was cache/branch simulation enabled?)"
    )]
    MissingEvent { event: String },
    #[error("malformed profile header at line {line}: {message}")]
    MalformedHeader { line: usize, message: String },
    #[error("non-numeric total `{token}` at line {line}")]
    NonNumericTotal { line: usize, token: String },
    #[error("perf output lacks the `{counter}` counter")]
    MissingCounter { counter: String },
    #[error("non-numeric perf value `{token}` at line {line}")]
    NonNumericValue { line: usize, token: String },
    #[error("measurement series is empty")]
    EmptySeries,
    #[error("series labels are swapped: expected (active, idle)")]
    SwappedSeries,
    #[error("active mean {active} J is below idle mean {idle} J")]
    NegativeEnergy { active: f64, idle: f64 },
    #[error("confidence test needs at least 2 samples, got {n}")]
    TooFewSamples { n: usize },
    #[error("confidence test needs a positive series mean")]
    ZeroMean,
    #[error("duplicate record id `{id}`")]
    DuplicateId { id: String },
    #[error("schema violation at row {row}: {message}")]
    SchemaViolation { row: usize, message: String },
    #[error("cannot parse row {row}: {message}")]
    RowParse { row: usize, message: String },
    #[error("CSV error: {0}")]
    Csv(String),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Invariant(#[from] InvariantViolation),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
