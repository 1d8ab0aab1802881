//! Domain data model: bitstream records, feature sets and measured energies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Raised when a string does not name a known enumeration value.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {what} `{value}`")]
pub struct UnknownVariant {
    pub what: &'static str,
    pub value: String,
}

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident, $what:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(
                #[serde(rename = $text)]
                $variant,
            )+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownVariant;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let trimmed = s.trim();
                $(
                    if trimmed.eq_ignore_ascii_case($text) {
                        return Ok($name::$variant);
                    }
                )+
                Err(UnknownVariant { what: $what, value: s.to_owned() })
            }
        }
    };
}

string_enum!(
    /// Video coding standard of a bitstream.
    Codec, "codec", {
        Avc => "AVC",
        Hevc => "HEVC",
        Vp9 => "VP9",
        Av1 => "AV1",
        Vvc => "VVC",
        Avm => "AVM",
    }
);

string_enum!(
    /// Whether the software decoder is a reference or a speed-optimized implementation.
    DecoderKind, "decoder kind", {
        Reference => "reference",
        Optimized => "optimized",
    }
);

string_enum!(
    /// Which decoder kinds a training or verification set draws from.
    DecoderScope, "decoder scope", {
        Reference => "reference",
        Optimized => "optimized",
        Both => "both",
    }
);

impl DecoderScope {
    pub fn includes(self, kind: DecoderKind) -> bool {
        match self {
            DecoderScope::Reference => kind == DecoderKind::Reference,
            DecoderScope::Optimized => kind == DecoderKind::Optimized,
            DecoderScope::Both => true,
        }
    }
}

string_enum!(
    /// Sequence class of the common test conditions.
    SequenceClass, "class", {
        A1 => "A1",
        A2 => "A2",
        A3 => "A3",
        B => "B",
    }
);

string_enum!(
    /// Encoder configuration: random access or low delay.
    CodingCondition, "condition", {
        RandomAccess => "RA",
        LowDelay => "LB",
    }
);

string_enum!(
    /// Measurement setup an energy sample was taken with.
    MeasurementSetup, "measurement setup", {
        Software => "MSS",
        Hardware => "MSH",
    }
);

string_enum!(
    FeatureSetKind, "feature set", {
        Temporal => "temporal",
        PerfCtc => "perf_ctc",
        Valgrind13Pe => "valgrind_13pe",
    }
);

impl FeatureSetKind {
    pub fn dimension(self) -> usize {
        match self {
            FeatureSetKind::Temporal => 1,
            FeatureSetKind::PerfCtc => 3,
            FeatureSetKind::Valgrind13Pe => 13,
        }
    }

    /// Column heading used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            FeatureSetKind::Temporal => "Temporal",
            FeatureSetKind::PerfCtc => "Perf CTC",
            FeatureSetKind::Valgrind13Pe => "Valgrind 13PE",
        }
    }
}

/// Which measured energy a model is trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyTarget {
    EnergySw,
    EnergyHw,
}

impl EnergyTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            EnergyTarget::EnergySw => "energy_sw",
            EnergyTarget::EnergyHw => "energy_hw",
        }
    }
}

impl fmt::Display for EnergyTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnergyTarget {
    type Err = UnknownVariant;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "energy_sw" | "sw" => Ok(EnergyTarget::EnergySw),
            "energy_hw" | "hw" => Ok(EnergyTarget::EnergyHw),
            _ => Err(UnknownVariant {
                what: "energy target",
                value: s.to_owned(),
            }),
        }
    }
}

/// A broken domain invariant on a constructed value.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct InvariantViolation(pub String);

/// The 13 callgrind counters recorded with cache and branch simulation enabled.
///
/// Field order is the canonical flattening order used for every feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ProcessorEventVector {
    pub ir: u64,
    pub dr: u64,
    pub dw: u64,
    pub i1mr: u64,
    pub d1mr: u64,
    pub d1mw: u64,
    pub ilmr: u64,
    pub dlmr: u64,
    pub dlmw: u64,
    pub bc: u64,
    pub bcm: u64,
    pub bi: u64,
    pub bim: u64,
}

impl ProcessorEventVector {
    /// Callgrind event names in canonical order.
    pub const EVENT_NAMES: [&'static str; 13] = [
        "Ir", "Dr", "Dw", "I1mr", "D1mr", "D1mw", "ILmr", "DLmr", "DLmw", "Bc", "Bcm", "Bi", "Bim",
    ];

    pub fn from_array(counts: [u64; 13]) -> Self {
        let [ir, dr, dw, i1mr, d1mr, d1mw, ilmr, dlmr, dlmw, bc, bcm, bi, bim] = counts;
        ProcessorEventVector {
            ir,
            dr,
            dw,
            i1mr,
            d1mr,
            d1mw,
            ilmr,
            dlmr,
            dlmw,
            bc,
            bcm,
            bi,
            bim,
        }
    }

    pub fn to_array(&self) -> [u64; 13] {
        [
            self.ir, self.dr, self.dw, self.i1mr, self.d1mr, self.d1mw, self.ilmr, self.dlmr,
            self.dlmw, self.bc, self.bcm, self.bi, self.bim,
        ]
    }

    pub fn to_features(&self) -> Vec<f64> {
        self.to_array().iter().map(|&c| c as f64).collect()
    }

    /// Checks that no miss count exceeds the access count feeding it.
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        let pairs = [
            ("I1mr", self.i1mr, "Ir", self.ir),
            ("D1mr", self.d1mr, "Dr", self.dr),
            ("D1mw", self.d1mw, "Dw", self.dw),
            ("ILmr", self.ilmr, "I1mr", self.i1mr),
            ("DLmr", self.dlmr, "D1mr", self.d1mr),
            ("DLmw", self.dlmw, "D1mw", self.d1mw),
            ("Bcm", self.bcm, "Bc", self.bc),
            ("Bim", self.bim, "Bi", self.bi),
        ];
        for (miss, miss_count, access, access_count) in pairs {
            if miss_count > access_count {
                return Err(InvariantViolation(format!(
                    "{miss} ({miss_count}) exceeds {access} ({access_count})"
                )));
            }
        }
        Ok(())
    }
}

/// Instruction count, cycle count and user time as reported by `perf stat`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfCtcFeatures {
    pub instructions: u64,
    pub cycles: u64,
    /// Seconds.
    pub user_time: f64,
}

impl PerfCtcFeatures {
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if !(self.user_time.is_finite() && self.user_time >= 0.0) {
            return Err(InvariantViolation(format!(
                "user time must be finite and nonnegative, got {}",
                self.user_time
            )));
        }
        Ok(())
    }

    pub fn to_features(&self) -> Vec<f64> {
        vec![self.instructions as f64, self.cycles as f64, self.user_time]
    }
}

/// Software decoding time in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalFeature {
    pub t_dec_sw: f64,
}

impl TemporalFeature {
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if !(self.t_dec_sw.is_finite() && self.t_dec_sw >= 0.0) {
            return Err(InvariantViolation(format!(
                "decoding time must be finite and nonnegative, got {}",
                self.t_dec_sw
            )));
        }
        Ok(())
    }
}

/// A pure decoding energy in joules, with the protocol metadata it was derived under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub joules: f64,
    pub setup: MeasurementSetup,
    pub n_repeats: u32,
    pub passed_confidence: bool,
}

impl EnergySample {
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if !(self.joules.is_finite() && self.joules >= 0.0) {
            return Err(InvariantViolation(format!(
                "energy must be finite and nonnegative, got {} J",
                self.joules
            )));
        }
        if self.n_repeats == 0 {
            return Err(InvariantViolation("n_repeats must be at least 1".into()));
        }
        Ok(())
    }
}

/// One encoded bitstream with its profiling features and measured energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitstreamRecord {
    pub id: String,
    pub codec: Codec,
    pub decoder_name: String,
    pub decoder_kind: DecoderKind,
    pub sequence: String,
    pub class_label: SequenceClass,
    pub qp: i32,
    pub condition: CodingCondition,
    pub temporal: Option<TemporalFeature>,
    pub perf: Option<PerfCtcFeatures>,
    pub valgrind: Option<ProcessorEventVector>,
    pub energy_sw: Option<EnergySample>,
    pub energy_hw: Option<EnergySample>,
}

impl BitstreamRecord {
    pub fn validate(&self) -> Result<(), InvariantViolation> {
        if self.temporal.is_none() && self.perf.is_none() && self.valgrind.is_none() {
            return Err(InvariantViolation(format!(
                "record `{}` carries no feature set",
                self.id
            )));
        }
        if let Some(t) = &self.temporal {
            t.validate()?;
        }
        if let Some(p) = &self.perf {
            p.validate()?;
        }
        if let Some(v) = &self.valgrind {
            v.validate()?;
        }
        for e in [&self.energy_sw, &self.energy_hw].into_iter().flatten() {
            e.validate()?;
        }
        Ok(())
    }

    /// Flattened feature row for `kind`, or `None` when the record lacks it.
    pub fn features(&self, kind: FeatureSetKind) -> Option<Vec<f64>> {
        match kind {
            FeatureSetKind::Temporal => self.temporal.map(|t| vec![t.t_dec_sw]),
            FeatureSetKind::PerfCtc => self.perf.map(|p| p.to_features()),
            FeatureSetKind::Valgrind13Pe => self.valgrind.map(|v| v.to_features()),
        }
    }

    pub fn energy(&self, target: EnergyTarget) -> Option<f64> {
        match target {
            EnergyTarget::EnergySw => self.energy_sw.map(|e| e.joules),
            EnergyTarget::EnergyHw => self.energy_hw.map(|e| e.joules),
        }
    }

    pub fn has_kind(&self, kind: FeatureSetKind) -> bool {
        match kind {
            FeatureSetKind::Temporal => self.temporal.is_some(),
            FeatureSetKind::PerfCtc => self.perf.is_some(),
            FeatureSetKind::Valgrind13Pe => self.valgrind.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<BitstreamRecord>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(records: Vec<BitstreamRecord>, provenance: impl Into<String>) -> Self {
        Dataset {
            records,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First id that occurs more than once, if any.
    pub fn duplicate_id(&self) -> Option<&str> {
        let mut seen = std::collections::HashSet::new();
        self.records
            .iter()
            .map(|r| r.id.as_str())
            .find(|id| !seen.insert(*id))
    }

    /// Ids of records that lack the feature set or the energy target.
    pub fn missing(&self, kind: FeatureSetKind, target: Option<EnergyTarget>) -> Vec<String> {
        self.records
            .iter()
            .filter(|r| !r.has_kind(kind) || target.is_some_and(|t| r.energy(t).is_none()))
            .map(|r| r.id.clone())
            .collect()
    }

    /// Keeps the records matching `keep`, preserving order and provenance.
    pub fn filtered(&self, keep: impl Fn(&BitstreamRecord) -> bool) -> Dataset {
        Dataset {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesLabel {
    Active,
    Idle,
}

/// Repeated energy readings of one state (decoding or idle) for one bitstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub values: Vec<f64>,
    pub label: SeriesLabel,
}

impl MeasurementSeries {
    pub fn new(label: SeriesLabel, values: Vec<f64>) -> Self {
        MeasurementSeries { values, label }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}
