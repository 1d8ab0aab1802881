//! Deterministic synthetic corpora with planted energy laws.
//!
//! Every processor-event column except `Ir` is drawn as a log-uniform ratio of the
//! column it is counted against, so the miss hierarchy holds by construction.
//! Software energy follows `e*·x`, hardware energy `α* + β*·(h·x)`, both scaled by
//! `1 + A·sin(2πu)` with `u` the position of `ln Ir` inside its range, and by
//! independent multiplicative Gaussian noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::types::{
    BitstreamRecord, Codec, CodingCondition, Dataset, DecoderKind, EnergySample, MeasurementSetup,
    PerfCtcFeatures, ProcessorEventVector, SequenceClass, TemporalFeature,
};

#[derive(Debug, thiserror::Error)]
pub enum BenchgenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

/// Closed range sampled log-uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRange {
    pub min: f64,
    pub max: f64,
}

impl LogRange {
    pub const fn new(min: f64, max: f64) -> Self {
        LogRange { min, max }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.min == self.max {
            return self.min;
        }
        let (lo, hi) = (self.min.ln(), self.max.ln());
        rng.random_range(lo..hi).exp()
    }

    /// Position of `v` in log space, 0 at `min` and 1 at `max`.
    fn position(&self, v: f64) -> f64 {
        if self.min == self.max {
            0.0
        } else {
            (v.ln() - self.min.ln()) / (self.max.ln() - self.min.ln())
        }
    }

    fn check(&self, name: &str) -> Result<(), BenchgenError> {
        if self.min.is_finite() && self.max.is_finite() && self.min > 0.0 && self.min <= self.max {
            Ok(())
        } else {
            Err(BenchgenError::InvalidSpec(format!(
                "range `{name}` must satisfy 0 < min <= max, got [{}, {}]",
                self.min, self.max
            )))
        }
    }
}

/// Sampling ranges for the event counts and the derived timing features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanges {
    /// Absolute instruction count.
    pub ir: LogRange,
    /// Ratios of each remaining event to its parent, in canonical order after `Ir`:
    /// Dr/Ir, Dw/Ir, I1mr/Ir, D1mr/Dr, D1mw/Dw, ILmr/I1mr, DLmr/D1mr, DLmw/D1mw,
    /// Bc/Ir, Bcm/Bc, Bi/Ir, Bim/Bi.
    pub ratios: [LogRange; 12],
    /// Instructions per cycle before memory stalls.
    pub ipc: LogRange,
    pub clock_hz: LogRange,
    /// Decoding time on top of user time, relative to user time.
    pub io_overhead: LogRange,
}

const RATIO_PARENT: [usize; 12] = [0, 0, 0, 1, 2, 3, 4, 5, 0, 9, 0, 11];
/// Ratios that bound a miss count by its access count and so may not exceed 1.
const MISS_RATIOS: [usize; 8] = [2, 3, 4, 5, 6, 7, 9, 11];

impl Default for FeatureRanges {
    fn default() -> Self {
        FeatureRanges {
            ir: LogRange::new(2e8, 8e9),
            ratios: [
                LogRange::new(0.25, 0.40),
                LogRange::new(0.08, 0.16),
                LogRange::new(1e-4, 2e-3),
                LogRange::new(5e-3, 4e-2),
                LogRange::new(5e-3, 3e-2),
                LogRange::new(0.02, 0.2),
                LogRange::new(0.01, 0.1),
                LogRange::new(0.05, 0.3),
                LogRange::new(0.08, 0.18),
                LogRange::new(0.01, 0.08),
                LogRange::new(2e-3, 1e-2),
                LogRange::new(0.02, 0.2),
            ],
            ipc: LogRange::new(1.2, 3.0),
            clock_hz: LogRange::new(1.8e9, 2.4e9),
            io_overhead: LogRange::new(1e-3, 3e-2),
        }
    }
}

/// Planted laws of one codec/decoder pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecSpec {
    pub codec: Codec,
    pub decoder_name: String,
    pub decoder_kind: DecoderKind,
    pub n_bitstreams: usize,
    /// Joules per event for software decoding.
    pub sw_coefficients: [f64; 13],
    pub hw_scale: f64,
    /// Joules.
    pub hw_offset: f64,
    /// Relative amplitude of the smooth perturbation; must lie in (-1, 1).
    pub nonlinearity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub codecs: Vec<CodecSpec>,
    /// Joules per event of the hardware law shared by all codecs.
    pub hw_base_coefficients: [f64; 13],
    pub ranges: FeatureRanges,
    pub noise_sigma_relative: f64,
    pub seed: u64,
}

/// Hardware energy per event shared by every codec in the default spec.
pub const DEFAULT_HW_BASE: [f64; 13] = [
    4e-10, 3e-10, 4e-10, 5e-9, 6e-9, 6e-9, 3e-8, 4e-8, 4e-8, 2e-10, 4e-9, 2e-10, 5e-9,
];

const DEFAULT_SW_BASE: [f64; 13] = [
    1.2e-9, 8e-10, 1e-9, 1.5e-8, 2e-8, 2e-8, 8e-8, 1e-7, 1e-7, 6e-10, 1.2e-8, 6e-10, 1.5e-8,
];

fn scaled(base: &[f64; 13], factor: f64) -> [f64; 13] {
    base.map(|c| c * factor)
}

impl CodecSpec {
    /// Optimized decoder with the default software law scaled by `sw_factor`.
    pub fn optimized(
        codec: Codec,
        decoder_name: &str,
        n_bitstreams: usize,
        sw_factor: f64,
    ) -> Self {
        CodecSpec {
            codec,
            decoder_name: decoder_name.to_owned(),
            decoder_kind: DecoderKind::Optimized,
            n_bitstreams,
            sw_coefficients: scaled(&DEFAULT_SW_BASE, sw_factor),
            hw_scale: 1.0,
            hw_offset: 0.0,
            nonlinearity: 0.0,
        }
    }
}

impl Default for GeneratorSpec {
    /// AVC, HEVC and VP9 share the hardware law; AV1 sees it through `α* = 3 J, β* = 2`.
    fn default() -> Self {
        let mut av1 = CodecSpec::optimized(Codec::Av1, "dav1d", 100, 1.3);
        av1.hw_offset = 3.0;
        av1.hw_scale = 2.0;
        GeneratorSpec {
            codecs: vec![
                CodecSpec::optimized(Codec::Avc, "ffmpeg-h264", 100, 0.8),
                CodecSpec::optimized(Codec::Hevc, "ffmpeg-hevc", 100, 1.0),
                CodecSpec::optimized(Codec::Vp9, "ffvp9", 100, 1.1),
                av1,
            ],
            hw_base_coefficients: DEFAULT_HW_BASE,
            ranges: FeatureRanges::default(),
            noise_sigma_relative: 0.01,
            seed: 42,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), BenchgenError> {
        let invalid = |m: String| Err(BenchgenError::InvalidSpec(m));
        if self.codecs.is_empty() {
            return invalid("no codecs configured".into());
        }
        if !(self.noise_sigma_relative.is_finite() && self.noise_sigma_relative >= 0.0) {
            return invalid(format!(
                "noise_sigma_relative must be finite and nonnegative, got {}",
                self.noise_sigma_relative
            ));
        }
        if self
            .hw_base_coefficients
            .iter()
            .any(|c| !(c.is_finite() && *c >= 0.0))
        {
            return invalid("hw_base_coefficients must be finite and nonnegative".into());
        }
        let r = &self.ranges;
        r.ir.check("ir")?;
        for (i, range) in r.ratios.iter().enumerate() {
            range.check(ProcessorEventVector::EVENT_NAMES[i + 1])?;
        }
        for &i in &MISS_RATIOS {
            if r.ratios[i].max > 1.0 {
                return invalid(format!(
                    "ratio range for {} exceeds 1 and would break the miss hierarchy",
                    ProcessorEventVector::EVENT_NAMES[i + 1]
                ));
            }
        }
        r.ipc.check("ipc")?;
        r.clock_hz.check("clock_hz")?;
        r.io_overhead.check("io_overhead")?;

        let mut seen = std::collections::HashSet::new();
        for c in &self.codecs {
            if !seen.insert((c.codec, c.decoder_name.as_str())) {
                return invalid(format!(
                    "duplicate codec/decoder pair {}/{}",
                    c.codec, c.decoder_name
                ));
            }
            if c.n_bitstreams == 0 {
                return invalid(format!(
                    "{}/{}: n_bitstreams must be positive",
                    c.codec, c.decoder_name
                ));
            }
            if c.sw_coefficients
                .iter()
                .any(|v| !(v.is_finite() && *v >= 0.0))
            {
                return invalid(format!(
                    "{}/{}: sw_coefficients must be finite and nonnegative",
                    c.codec, c.decoder_name
                ));
            }
            if !(c.hw_scale.is_finite() && c.hw_scale > 0.0) {
                return invalid(format!(
                    "{}/{}: hw_scale must be positive",
                    c.codec, c.decoder_name
                ));
            }
            if !(c.hw_offset.is_finite() && c.hw_offset >= 0.0) {
                return invalid(format!(
                    "{}/{}: hw_offset must be nonnegative",
                    c.codec, c.decoder_name
                ));
            }
            if !(c.nonlinearity.is_finite() && c.nonlinearity.abs() < 1.0) {
                return invalid(format!(
                    "{}/{}: nonlinearity must lie in (-1, 1)",
                    c.codec, c.decoder_name
                ));
            }
        }
        Ok(())
    }

    pub fn total_bitstreams(&self) -> usize {
        self.codecs.iter().map(|c| c.n_bitstreams).sum()
    }
}

/// Noise-free energies of one generated record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedEnergy {
    pub id: String,
    pub sw_clean: f64,
    /// Shared hardware law `h·x` including the perturbation, before `α*`/`β*`.
    pub hw_base: f64,
    pub hw_clean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: GeneratorSpec,
    pub records: Vec<PlantedEnergy>,
}

impl GroundTruth {
    pub fn get(&self, id: &str) -> Option<&PlantedEnergy> {
        self.records.iter().find(|r| r.id == id)
    }
}

fn dot(a: &[f64; 13], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(c, v)| c * v).sum()
}

fn noise_factor(rng: &mut impl Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (1.0 + sigma * z).max(0.05)
}

fn sample_events(ranges: &FeatureRanges, rng: &mut impl Rng) -> ProcessorEventVector {
    let mut counts = [0f64; 13];
    counts[0] = ranges.ir.sample(rng).round();
    for (i, range) in ranges.ratios.iter().enumerate() {
        let parent = counts[RATIO_PARENT[i]];
        counts[i + 1] = (parent * range.sample(rng)).floor();
    }
    ProcessorEventVector::from_array(counts.map(|c| c as u64))
}

/// Draws the corpus and its ground truth. Identical specs give identical output.
pub fn generate(spec: &GeneratorSpec) -> Result<(Dataset, GroundTruth), BenchgenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ranges = &spec.ranges;
    let qps = [22, 27, 32, 37];
    let mut records = Vec::with_capacity(spec.total_bitstreams());
    let mut truth = Vec::with_capacity(spec.total_bitstreams());

    for c in &spec.codecs {
        for i in 0..c.n_bitstreams {
            let pe = sample_events(ranges, &mut rng);
            let x = pe.to_features();
            let ipc = ranges.ipc.sample(&mut rng);
            let clock = ranges.clock_hz.sample(&mut rng);
            let overhead = ranges.io_overhead.sample(&mut rng);
            let stalls = 10.0 * pe.d1mr as f64 + 200.0 * pe.dlmr as f64 + 15.0 * pe.bcm as f64;
            let cycles = (x[0] / ipc + stalls).round();
            let user_time = cycles / clock;

            let bump =
                1.0 + c.nonlinearity * (std::f64::consts::TAU * ranges.ir.position(x[0])).sin();
            let sw_clean = dot(&c.sw_coefficients, &x) * bump;
            let hw_base = dot(&spec.hw_base_coefficients, &x) * bump;
            let hw_clean = c.hw_offset + c.hw_scale * hw_base;
            let sw = sw_clean * noise_factor(&mut rng, spec.noise_sigma_relative);
            let hw = hw_clean * noise_factor(&mut rng, spec.noise_sigma_relative);

            let id = format!("{}-{}-{i:04}", c.codec, c.decoder_name);
            let sample = |joules, setup| EnergySample {
                joules,
                setup,
                n_repeats: 5,
                passed_confidence: true,
            };
            records.push(BitstreamRecord {
                id: id.clone(),
                codec: c.codec,
                decoder_name: c.decoder_name.clone(),
                decoder_kind: c.decoder_kind,
                sequence: format!("seq{:02}", i % 12),
                class_label: SequenceClass::ALL[i % SequenceClass::ALL.len()],
                qp: qps[(i / 12) % qps.len()],
                condition: CodingCondition::RandomAccess,
                temporal: Some(TemporalFeature {
                    t_dec_sw: user_time * (1.0 + overhead),
                }),
                perf: Some(PerfCtcFeatures {
                    instructions: pe.ir,
                    cycles: cycles as u64,
                    user_time,
                }),
                valgrind: Some(pe),
                energy_sw: Some(sample(sw, MeasurementSetup::Software)),
                energy_hw: Some(sample(hw, MeasurementSetup::Hardware)),
            });
            truth.push(PlantedEnergy {
                id,
                sw_clean,
                hw_base,
                hw_clean,
            });
        }
    }

    let provenance = format!("benchgen seed={} n={}", spec.seed, records.len());
    Ok((
        Dataset::new(records, provenance),
        GroundTruth {
            spec: spec.clone(),
            records: truth,
        },
    ))
}

/// Copy of `dataset` with every profiling feature and energy doubled, ids unchanged.
///
/// Under a homogeneous linear law the copy costs exactly twice the energy.
pub fn doubled_profile(dataset: &Dataset) -> Dataset {
    let records = dataset
        .records
        .iter()
        .map(|r| {
            let mut d = r.clone();
            d.valgrind = r
                .valgrind
                .map(|v| ProcessorEventVector::from_array(v.to_array().map(|c| 2 * c)));
            d.perf = r.perf.map(|p| PerfCtcFeatures {
                instructions: 2 * p.instructions,
                cycles: 2 * p.cycles,
                user_time: 2.0 * p.user_time,
            });
            d.temporal = r.temporal.map(|t| TemporalFeature {
                t_dec_sw: 2.0 * t.t_dec_sw,
            });
            let double = |e: Option<EnergySample>| {
                e.map(|s| EnergySample {
                    joules: 2.0 * s.joules,
                    ..s
                })
            };
            d.energy_sw = double(r.energy_sw);
            d.energy_hw = double(r.energy_hw);
            d
        })
        .collect();
    Dataset::new(records, format!("{} (doubled)", dataset.provenance))
}
