//! Command-line front end: `ingest`, `train`, `evaluate`, `cross-predict`, `rehwed`, `synth`.
//!
//! Exit codes are 0 on success, 2 for data or model errors and 64 for usage errors.
//! Options may also come from a TOML or JSON file given with `--config`, whose keys
//! are flag names; flags on the command line win. Every run writes the options it
//! resolved to `resolved_config.json` in the output directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use crate::benchgen::{generate, GeneratorSpec};
use crate::crosscodec::{phase_table, run_phase, scatter_csv, PhaseConfig};
use crate::evaluation::{
    cross_validate_with_folds, kfold_split, kfold_split_stratified, mape_table, percent,
};
use crate::ingest::{
    confidence_check, derive_decoding_energy, load_dataset_file, parse_callgrind,
    parse_measurement_csv, parse_perf_stat, write_dataset_csv, write_dataset_json, DatasetFormat,
    EnergyUnit, IngestError, DEFAULT_CONFIDENCE, DEFAULT_MAX_DEVIATION,
};
use crate::regression::{training_data, EnergyModel, ModelFile, ModelProvenance, Regressor};
use crate::rehwed::{
    compute_rehwed, rehwed_table, train_rehwed_model_with, ProfileSet, RehwedTraining,
};
use crate::types::{
    BitstreamRecord, Codec, CodingCondition, Dataset, DecoderKind, DecoderScope, EnergySample,
    EnergyTarget, FeatureSetKind, MeasurementSeries, MeasurementSetup, SequenceClass,
    TemporalFeature,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

const SUBCOMMANDS: [&str; 6] = [
    "ingest",
    "train",
    "evaluate",
    "cross-predict",
    "rehwed",
    "synth",
];
const GLOBAL_VALUE_FLAGS: [&str; 4] = ["--seed", "--config", "--out-dir", "--format"];

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Table,
    Both,
}

#[derive(Debug, Parser)]
#[command(
    name = "hwdec-energy",
    version,
    about = "Hardware video decoder energy models from software profiles"
)]
struct Cli {
    /// Seed for fold shuffles, optimizer restarts and synthetic corpora.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// TOML or JSON file of default option values, keyed by flag name.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Both)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build one dataset record from profiler outputs and energy logs.
    Ingest(IngestArgs),
    /// Fit an energy model and save it as JSON.
    Train(TrainArgs),
    /// K-fold cross-validation of energy models, one table row per decoder.
    Evaluate(EvaluateArgs),
    /// Train on some codecs, predict and verify the hardware energy of another.
    CrossPredict(CrossPredictArgs),
    /// Relative expected hardware energy demand of a test decoder against an anchor.
    Rehwed(RehwedArgs),
    /// Generate a synthetic corpus with planted energy laws.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    id: String,
    #[arg(long)]
    codec: Codec,
    #[arg(long)]
    decoder_name: String,
    #[arg(long)]
    decoder_kind: DecoderKind,
    #[arg(long)]
    sequence: String,
    #[arg(long)]
    class: SequenceClass,
    #[arg(long, allow_negative_numbers = true)]
    qp: i32,
    #[arg(long, default_value = "RA")]
    condition: CodingCondition,
    /// callgrind output with cache and branch simulation.
    #[arg(long)]
    callgrind: Option<PathBuf>,
    /// `perf stat -x` output.
    #[arg(long)]
    perf: Option<PathBuf>,
    /// Software decoding time in seconds.
    #[arg(long)]
    t_dec_sw: Option<f64>,
    /// Alternating active/idle log measured on the software setup.
    #[arg(long)]
    energy_sw: Option<PathBuf>,
    /// Alternating active/idle log measured on the hardware setup.
    #[arg(long)]
    energy_hw: Option<PathBuf>,
    /// Unit of the energy logs: j, ws or mwh.
    #[arg(long, default_value = "j")]
    energy_unit: EnergyUnit,
    /// Dataset to create or append to; defaults to `<out-dir>/dataset.csv`.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "valgrind_13pe")]
    kind: FeatureSetKind,
    #[arg(long, default_value = "gpr")]
    regressor: Regressor,
    #[arg(long, default_value = "energy_hw")]
    target: EnergyTarget,
    /// Comma-separated codecs to train on; all by default, HEVC,VP9,AV1 for `--purpose rehwed`.
    #[arg(long)]
    codecs: Option<String>,
    /// Decoder kinds to train on; `both` by default, `optimized` for `--purpose rehwed`.
    #[arg(long)]
    decoder_scope: Option<DecoderScope>,
    /// Recorded in the model file; `rehwed` forces a hardware-energy GPR.
    #[arg(long, default_value = "energy")]
    purpose: String,
    /// Defaults to `<out-dir>/model.json`.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated feature sets, or `all`.
    #[arg(long, default_value = "all")]
    kind: String,
    #[arg(long, default_value = "gpr")]
    regressor: Regressor,
    #[arg(long, default_value = "energy_hw")]
    target: EnergyTarget,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Spread sequence classes evenly over the folds.
    #[arg(long, action = ArgAction::SetTrue)]
    stratify: bool,
    /// One evaluation over all records instead of one per decoder.
    #[arg(long, action = ArgAction::SetTrue)]
    pooled: bool,
}

#[derive(Debug, Args)]
struct CrossPredictArgs {
    /// Single dataset split into training and verification codecs.
    #[arg(long, conflicts_with_all = ["train", "verify"])]
    dataset: Option<PathBuf>,
    #[arg(long, requires = "verify")]
    train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    verify: Option<PathBuf>,
    /// Built-in phase 1 to 7.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7), conflicts_with_all = ["train_codecs", "verify_codec"])]
    phase: Option<u8>,
    /// Custom phase: comma-separated training codecs.
    #[arg(long, requires = "verify_codec")]
    train_codecs: Option<String>,
    /// Custom phase: verification codec.
    #[arg(long, requires = "train_codecs")]
    verify_codec: Option<Codec>,
    #[arg(long, default_value = "both")]
    decoder_scope: DecoderScope,
    /// Comma-separated feature sets, or `all`.
    #[arg(long, default_value = "all")]
    kind: String,
    #[arg(long, default_value = "gpr")]
    regressor: Regressor,
}

#[derive(Debug, Args)]
struct RehwedArgs {
    #[arg(long)]
    model: PathBuf,
    /// Dataset with the test decoder's profiles.
    #[arg(long)]
    test: PathBuf,
    /// Dataset with the anchor decoder's profiles.
    #[arg(long)]
    anchor: PathBuf,
    #[arg(long)]
    test_label: Option<String>,
    #[arg(long)]
    anchor_label: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Generator spec (TOML or JSON); the built-in spec when absent. Its seed is replaced by `--seed`.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    noise: Option<f64>,
    #[arg(long)]
    n_per_codec: Option<usize>,
}

struct Output {
    dir: PathBuf,
    format: OutputFormat,
}

impl Output {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Writes `<stem>.json` and/or `<stem>.txt` and echoes the table, or the JSON when no table is wanted.
    fn report(&self, stem: &str, json: &str, table: &str) -> Result<()> {
        if self.format != OutputFormat::Table {
            self.write(&format!("{stem}.json"), json)?;
        }
        if self.format != OutputFormat::Json {
            self.write(&format!("{stem}.txt"), table)?;
            print!("{table}");
        } else {
            print!("{json}");
        }
        Ok(())
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(path: &Path) -> Result<Dataset> {
    load_dataset_file(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(
            item.parse::<T>()
                .map_err(|e| usage(format!("bad {what} `{item}`: {e}")))?,
        );
    }
    if out.is_empty() {
        return Err(usage(format!("empty {what} list")));
    }
    Ok(out)
}

fn parse_kinds(text: &str) -> Result<Vec<FeatureSetKind>> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(FeatureSetKind::ALL.to_vec());
    }
    let mut kinds: Vec<FeatureSetKind> = parse_list(text, "feature set")?;
    kinds.sort();
    kinds.dedup();
    Ok(kinds)
}

/// Flag/value pairs from a config file, in key order.
fn config_args(path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    let table: BTreeMap<String, serde_json::Value> =
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?
        } else {
            let value: toml::Table = text
                .parse()
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
            serde_json::to_value(value)
                .and_then(serde_json::from_value)
                .map_err(|e| usage(format!("config {}: {e}", path.display())))?
        };
    let mut args = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            continue;
        }
        match value {
            serde_json::Value::Bool(true) => args.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => {
                args.push(flag.into());
                args.push(s.into());
            }
            serde_json::Value::Number(n) => {
                args.push(flag.into());
                args.push(n.to_string().into());
            }
            serde_json::Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|v| {
                        v.as_str()
                            .map(str::to_owned)
                            .unwrap_or_else(|| v.to_string())
                    })
                    .collect();
                args.push(flag.into());
                args.push(parts.join(",").into());
            }
            serde_json::Value::Object(_) => {
                return Err(usage(format!("config key `{key}` must not be a table")))
            }
        }
    }
    Ok(args)
}

/// Inserts config-file options right after the subcommand so that later command-line flags override them.
fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let text: Vec<String> = args
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < text.len() {
        let t = &text[i];
        if let Some(v) = t.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if GLOBAL_VALUE_FLAGS.contains(&t.as_str()) {
            if t == "--config" {
                config = text.get(i + 1).map(PathBuf::from);
            }
            i += 1;
        } else if sub.is_none() && SUBCOMMANDS.contains(&t.as_str()) {
            sub = Some(i);
        }
        i += 1;
    }
    match (config, sub) {
        (Some(path), Some(pos)) => {
            let mut merged = args[..=pos].to_vec();
            merged.extend(config_args(&path)?);
            merged.extend_from_slice(&args[pos + 1..]);
            Ok(merged)
        }
        _ => Ok(args),
    }
}

/// Every option of the chosen subcommand and the seed/format globals, keyed by flag name.
fn resolved_config(
    cmd: &clap::Command,
    matches: &clap::ArgMatches,
) -> BTreeMap<String, serde_json::Value> {
    let mut out = BTreeMap::new();
    let mut collect = |cmd: &clap::Command, m: &clap::ArgMatches, globals: bool| {
        for arg in cmd.get_arguments() {
            let id = arg.get_id().as_str();
            if matches!(id, "help" | "version" | "config" | "out_dir")
                || arg.is_global_set() != globals
            {
                continue;
            }
            let key = arg.get_long().unwrap_or(id).to_owned();
            if matches!(arg.get_action(), ArgAction::SetTrue) {
                out.insert(key, serde_json::Value::Bool(m.get_flag(id)));
            } else if let Ok(Some(raw)) = m.try_get_raw(id) {
                let values: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
                out.insert(key, serde_json::Value::String(values.join(",")));
            }
        }
    };
    collect(cmd, matches, true);
    if let Some((name, sub_matches)) = matches.subcommand() {
        if let Some(sub_cmd) = cmd.find_subcommand(name) {
            collect(sub_cmd, sub_matches, false);
        }
    }
    out
}

/// Runs the CLI on `args` (program name first) and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let cmd = Cli::command().args_override_self(true);
    let matches = match cmd.clone().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    let resolved = resolved_config(&cmd, &matches);
    match execute(cli, &resolved) {
        Ok(()) => EXIT_OK,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}

fn execute(cli: Cli, resolved: &BTreeMap<String, serde_json::Value>) -> Result<()> {
    let out = Output {
        dir: cli.out_dir.clone(),
        format: cli.format,
    };
    fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;
    out.write("resolved_config.json", &to_json(resolved)?)?;
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a, &out),
        Command::Train(a) => cmd_train(a, cli.seed, &out),
        Command::Evaluate(a) => cmd_evaluate(a, cli.seed, &out),
        Command::CrossPredict(a) => cmd_cross_predict(a, cli.seed, &out),
        Command::Rehwed(a) => cmd_rehwed(a, &out),
        Command::Synth(a) => cmd_synth(a, cli.seed, &out),
    }
}

fn halfwidth(series: &MeasurementSeries) -> String {
    confidence_check(series, DEFAULT_MAX_DEVIATION, DEFAULT_CONFIDENCE)
        .map(|c| format!("±{}", percent(c.relative_halfwidth)))
        .unwrap_or_else(|_| "n/a".into())
}

fn measured_energy(
    path: &Path,
    unit: EnergyUnit,
    setup: MeasurementSetup,
    id: &str,
    label: &str,
) -> Result<EnergySample> {
    let (active, idle) = parse_measurement_csv(&read(path)?, unit)
        .with_context(|| format!("parsing {}", path.display()))?;
    let sample = derive_decoding_energy(&active, &idle, setup)
        .with_context(|| format!("{}", path.display()))?;
    println!(
        "{id}: {label} {:.6} J from {} repeats (active {}, idle {}), confidence {}",
        sample.joules,
        sample.n_repeats,
        halfwidth(&active),
        halfwidth(&idle),
        if sample.passed_confidence {
            "passed"
        } else {
            "FAILED"
        }
    );
    Ok(sample)
}

fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    match DatasetFormat::from_path(path) {
        DatasetFormat::Json => write_dataset_json(dataset, &mut buf)?,
        DatasetFormat::Csv => write_dataset_csv(dataset, &mut buf)?,
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn cmd_ingest(a: &IngestArgs, out: &Output) -> Result<()> {
    if a.callgrind.is_none() && a.perf.is_none() && a.t_dec_sw.is_none() {
        return Err(usage(
            "ingest needs at least one of --callgrind, --perf, --t-dec-sw",
        ));
    }
    let path = a
        .dataset
        .clone()
        .unwrap_or_else(|| out.dir.join("dataset.csv"));
    let mut dataset = if path.exists() {
        load(&path)?
    } else {
        Dataset::new(Vec::new(), "ingest")
    };
    if dataset.records.iter().any(|r| r.id == a.id) {
        return Err(anyhow::Error::new(IngestError::DuplicateId {
            id: a.id.clone(),
        }))
        .with_context(|| format!("appending to {}", path.display()));
    }

    let valgrind = match &a.callgrind {
        Some(p) => {
            Some(parse_callgrind(&read(p)?).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let perf = match &a.perf {
        Some(p) => {
            Some(parse_perf_stat(&read(p)?).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => None,
    };
    let energy_sw = match &a.energy_sw {
        Some(p) => Some(measured_energy(
            p,
            a.energy_unit,
            MeasurementSetup::Software,
            &a.id,
            "energy_sw",
        )?),
        None => None,
    };
    let energy_hw = match &a.energy_hw {
        Some(p) => Some(measured_energy(
            p,
            a.energy_unit,
            MeasurementSetup::Hardware,
            &a.id,
            "energy_hw",
        )?),
        None => None,
    };
    let record = BitstreamRecord {
        id: a.id.clone(),
        codec: a.codec,
        decoder_name: a.decoder_name.clone(),
        decoder_kind: a.decoder_kind,
        sequence: a.sequence.clone(),
        class_label: a.class,
        qp: a.qp,
        condition: a.condition,
        temporal: a.t_dec_sw.map(|t| TemporalFeature { t_dec_sw: t }),
        perf,
        valgrind,
        energy_sw,
        energy_hw,
    };
    record
        .validate()
        .with_context(|| format!("record `{}`", a.id))?;
    dataset.records.push(record);
    write_dataset(&dataset, &path)?;
    println!(
        "{}: {} record(s) in {}",
        a.id,
        dataset.len(),
        path.display()
    );
    Ok(())
}

fn cmd_train(a: &TrainArgs, seed: u64, out: &Output) -> Result<()> {
    let dataset = load(&a.dataset)?;
    let rehwed = a.purpose == "rehwed";
    let codecs: Option<Vec<Codec>> = match &a.codecs {
        Some(text) => Some(parse_list(text, "codec")?),
        None if rehwed => Some(RehwedTraining::default().codecs),
        None => None,
    };
    let scope = a.decoder_scope.unwrap_or(if rehwed {
        DecoderScope::Optimized
    } else {
        DecoderScope::Both
    });

    let file = if rehwed {
        if a.regressor != Regressor::Gpr || a.target != EnergyTarget::EnergyHw {
            return Err(usage("--purpose rehwed trains a GPR on energy_hw"));
        }
        train_rehwed_model_with(
            &dataset,
            &RehwedTraining {
                codecs: codecs.unwrap_or_default(),
                decoder_scope: scope,
                kind: a.kind,
                seed,
            },
        )?
    } else {
        let subset = dataset.filtered(|r| {
            codecs.as_ref().is_none_or(|c| c.contains(&r.codec)) && scope.includes(r.decoder_kind)
        });
        let (features, targets) = training_data(&subset, a.kind, a.target)?;
        let model = EnergyModel::fit(a.regressor, &features, &targets, seed)?;
        let mut used: Vec<Codec> = subset.records.iter().map(|r| r.codec).collect();
        used.sort();
        used.dedup();
        ModelFile {
            model,
            provenance: Some(ModelProvenance {
                purpose: a.purpose.clone(),
                training_codecs: used,
                decoder_scope: scope.to_string(),
                seed,
            }),
        }
    };
    let path = a
        .model_out
        .clone()
        .unwrap_or_else(|| out.dir.join("model.json"));
    fs::write(&path, file.to_json_string()? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    let codecs: Vec<&str> = file
        .provenance
        .as_ref()
        .map(|p| p.training_codecs.iter().map(|c| c.as_str()).collect())
        .unwrap_or_default();
    println!(
        "trained {} on {} ({}, {}) -> {}",
        file.model.regressor(),
        codecs.join("+"),
        a.kind,
        a.target,
        path.display()
    );
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs, seed: u64, out: &Output) -> Result<()> {
    let dataset = load(&a.dataset)?;
    let kinds = parse_kinds(&a.kind)?;
    if a.k < 2 {
        return Err(usage("--k must be at least 2"));
    }
    let groups: Vec<(String, Dataset)> = if a.pooled {
        vec![("all".into(), dataset.clone())]
    } else {
        let mut names: Vec<String> = dataset
            .records
            .iter()
            .map(|r| r.decoder_name.clone())
            .collect();
        names.sort();
        names.dedup();
        names
            .into_iter()
            .map(|n| {
                let subset = dataset.filtered(|r| r.decoder_name == n);
                (n, subset)
            })
            .collect()
    };
    let mut reports = Vec::new();
    for (label, subset) in &groups {
        let folds = if a.stratify {
            kfold_split_stratified(subset, a.k, seed, |r| r.class_label)
        } else {
            kfold_split(subset, a.k, seed)
        }
        .with_context(|| format!("decoder `{label}`"))?;
        for &kind in &kinds {
            let mut report =
                cross_validate_with_folds(subset, kind, a.regressor, a.target, &folds, seed)
                    .with_context(|| format!("decoder `{label}`, {kind}"))?;
            report.label = label.clone();
            reports.push(report);
        }
    }
    let title = format!(
        "MAPE of {} ({}, {}-fold, seed {seed})",
        a.target, a.regressor, a.k
    );
    out.report(
        "evaluation",
        &to_json(&reports)?,
        &mape_table(&title, &reports),
    )
}

fn cmd_cross_predict(a: &CrossPredictArgs, seed: u64, out: &Output) -> Result<()> {
    let phase = match (a.phase, &a.train_codecs, a.verify_codec) {
        (Some(id), _, _) => PhaseConfig::preset(id, a.decoder_scope)?,
        (None, Some(train), Some(verify)) => {
            let codecs: Vec<Codec> = parse_list(train, "codec")?;
            PhaseConfig::custom(&codecs, verify, a.decoder_scope)
                .map_err(|e| usage(e.to_string()))?
        }
        _ => {
            return Err(usage(
                "give --phase 1..7 or both --train-codecs and --verify-codec",
            ))
        }
    };
    let (train, verify) = match (&a.dataset, &a.train, &a.verify) {
        (Some(path), _, _) => {
            let ds = load(path)?;
            (
                ds.filtered(|r| phase.training_codecs.contains(&r.codec)),
                ds.filtered(|r| r.codec == phase.verification_codec),
            )
        }
        (None, Some(t), Some(v)) => (load(t)?, load(v)?),
        _ => return Err(usage("give --dataset or both --train and --verify")),
    };
    let mut reports = Vec::new();
    for kind in parse_kinds(&a.kind)? {
        reports.extend(
            run_phase(&train, &verify, &phase, kind, a.regressor, seed)
                .with_context(|| format!("{} with {kind}", phase.describe()))?,
        );
    }
    out.write("scatter.csv", &scatter_csv(&reports)?)?;
    out.report("cross_codec", &to_json(&reports)?, &phase_table(&reports))
}

fn default_label(dataset: &Dataset, path: &Path) -> String {
    let mut names: Vec<&str> = dataset
        .records
        .iter()
        .map(|r| r.decoder_name.as_str())
        .collect();
    names.sort();
    names.dedup();
    match names.as_slice() {
        [one] => (*one).to_owned(),
        _ => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string()),
    }
}

fn cmd_rehwed(a: &RehwedArgs, out: &Output) -> Result<()> {
    let file = ModelFile::from_json_str(&read(&a.model)?)
        .with_context(|| format!("loading model {}", a.model.display()))?;
    let kind = file.model.kind();
    let test = load(&a.test)?;
    let anchor = load(&a.anchor)?;
    let test_label = a
        .test_label
        .clone()
        .unwrap_or_else(|| default_label(&test, &a.test));
    let anchor_label = a
        .anchor_label
        .clone()
        .unwrap_or_else(|| default_label(&anchor, &a.anchor));
    let test_set = ProfileSet::from_dataset(&test, kind, test_label)
        .with_context(|| format!("{}", a.test.display()))?;
    let anchor_set = ProfileSet::from_dataset(&anchor, kind, anchor_label)
        .with_context(|| format!("{}", a.anchor.display()))?;
    let report = compute_rehwed(&file.model, &test_set, &anchor_set)?;
    out.report(
        "rehwed",
        &to_json(&report)?,
        &rehwed_table(std::slice::from_ref(&report)),
    )
}

fn cmd_synth(a: &SynthArgs, seed: u64, out: &Output) -> Result<()> {
    let mut spec = match &a.spec {
        Some(path) => {
            let text = read(path)?;
            if path.extension().is_some_and(|e| e == "json") {
                serde_json::from_str::<GeneratorSpec>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            } else {
                toml::from_str::<GeneratorSpec>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
        }
        None => GeneratorSpec::default(),
    };
    spec.seed = seed;
    if let Some(noise) = a.noise {
        spec.noise_sigma_relative = noise;
    }
    if let Some(n) = a.n_per_codec {
        for c in &mut spec.codecs {
            c.n_bitstreams = n;
        }
    }
    let (dataset, truth) = generate(&spec)?;
    let path = out.dir.join("dataset.csv");
    write_dataset(&dataset, &path)?;
    out.write("ground_truth.json", &to_json(&truth)?)?;
    println!("{} records -> {}", dataset.len(), path.display());
    Ok(())
}
