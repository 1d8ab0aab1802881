//! Alternating active/idle energy measurements and their confidence test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::IngestError;
use crate::types::{EnergySample, MeasurementSeries, MeasurementSetup, SeriesLabel};

pub const DEFAULT_MAX_DEVIATION: f64 = 0.02;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceCheckResult {
    pub passed: bool,
    /// Confidence-interval half width relative to the mean.
    pub relative_halfwidth: f64,
    pub mean: f64,
    pub n: usize,
}

/// Unit of the energy readings in a measurement log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyUnit {
    #[default]
    Joules,
    WattSeconds,
    MilliwattHours,
}

impl EnergyUnit {
    pub fn to_joules(self, value: f64) -> f64 {
        match self {
            EnergyUnit::Joules | EnergyUnit::WattSeconds => value,
            EnergyUnit::MilliwattHours => value * 3.6,
        }
    }
}

impl std::str::FromStr for EnergyUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "j" | "joules" => Ok(EnergyUnit::Joules),
            "ws" | "watt-seconds" => Ok(EnergyUnit::WattSeconds),
            "mwh" | "milliwatt-hours" => Ok(EnergyUnit::MilliwattHours),
            other => Err(format!(
                "unknown energy unit `{other}` (expected j, ws or mwh)"
            )),
        }
    }
}

/// Tests whether the two-sided Student-t interval of the series mean stays
/// within `max_deviation` of the mean at the given confidence level.
pub fn confidence_check(
    series: &MeasurementSeries,
    max_deviation: f64,
    confidence: f64,
) -> Result<ConfidenceCheckResult, IngestError> {
    let n = series.values.len();
    if n < 2 {
        return Err(IngestError::TooFewSamples { n });
    }
    let mean = series.mean();
    if mean <= 0.0 {
        return Err(IngestError::ZeroMean);
    }
    let var = series
        .values
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        / (n - 1) as f64;
    let relative_halfwidth = if var == 0.0 {
        0.0
    } else {
        let dof = (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, dof)
            .expect("dof >= 1")
            .inverse_cdf(0.5 * (1.0 + confidence));
        t * var.sqrt() / ((n as f64).sqrt() * mean)
    };
    Ok(ConfidenceCheckResult {
        passed: relative_halfwidth < max_deviation,
        relative_halfwidth,
        mean,
        n,
    })
}

/// Pure decoding energy: mean active reading minus mean idle reading.
pub fn derive_decoding_energy(
    active: &MeasurementSeries,
    idle: &MeasurementSeries,
    setup: MeasurementSetup,
) -> Result<EnergySample, IngestError> {
    if active.values.is_empty() || idle.values.is_empty() {
        return Err(IngestError::EmptySeries);
    }
    if active.label != SeriesLabel::Active || idle.label != SeriesLabel::Idle {
        return Err(IngestError::SwappedSeries);
    }
    let active_mean = active.mean();
    let idle_mean = idle.mean();
    if active_mean < idle_mean {
        return Err(IngestError::NegativeEnergy {
            active: active_mean,
            idle: idle_mean,
        });
    }
    let passes = |s: &MeasurementSeries| {
        confidence_check(s, DEFAULT_MAX_DEVIATION, DEFAULT_CONFIDENCE)
            .map(|c| c.passed)
            .unwrap_or(false)
    };
    Ok(EnergySample {
        joules: active_mean - idle_mean,
        setup,
        n_repeats: active.values.len().min(idle.values.len()) as u32,
        passed_confidence: passes(active) && passes(idle),
    })
}

/// Reads a `label,repeat_index,joules` log into (active, idle) series ordered by repeat index.
pub fn parse_measurement_csv(
    text: &str,
    unit: EnergyUnit,
) -> Result<(MeasurementSeries, MeasurementSeries), IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::SchemaViolation {
                row: 0,
                message: format!("measurement log lacks column `{name}`"),
            })
    };
    let (label_col, repeat_col, joules_col) =
        (column("label")?, column("repeat_index")?, column("joules")?);

    let mut active = Vec::new();
    let mut idle = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| IngestError::RowParse {
            row: row_no,
            message: e.to_string(),
        })?;
        let field = |c: usize| row.get(c).unwrap_or("");
        let repeat: u32 = field(repeat_col)
            .parse()
            .map_err(|_| IngestError::RowParse {
                row: row_no,
                message: format!("bad repeat_index `{}`", field(repeat_col)),
            })?;
        let joules: f64 = field(joules_col)
            .parse()
            .map_err(|_| IngestError::RowParse {
                row: row_no,
                message: format!("bad energy value `{}`", field(joules_col)),
            })?;
        if !(joules.is_finite() && joules >= 0.0) {
            return Err(IngestError::RowParse {
                row: row_no,
                message: format!("energy must be finite and nonnegative, got {joules}"),
            });
        }
        let value = unit.to_joules(joules);
        match field(label_col).to_ascii_lowercase().as_str() {
            "active" => active.push((repeat, value)),
            "idle" => idle.push((repeat, value)),
            other => {
                return Err(IngestError::SchemaViolation {
                    row: row_no,
                    message: format!("unknown series label `{other}`"),
                })
            }
        }
    }
    active.sort_by_key(|(r, _)| *r);
    idle.sort_by_key(|(r, _)| *r);
    Ok((
        MeasurementSeries::new(
            SeriesLabel::Active,
            active.into_iter().map(|(_, v)| v).collect(),
        ),
        MeasurementSeries::new(
            SeriesLabel::Idle,
            idle.into_iter().map(|(_, v)| v).collect(),
        ),
    ))
}
