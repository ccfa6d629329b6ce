//! The `boolclass` command line: `gen`, `train`, `eval`, `audit` and
//! `transform`. Every subcommand reads optional defaults from a TOML config
//! file (`--config`), lets flags override them, and echoes the effective
//! configuration into the output directory.
//!
//! Exit codes: 0 success, 1 internal error or failed audit, 2 user error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::aig::{parse_aag, simulate_exhaustive, write_aag, Circuit};
use crate::builtins::{builtin, DEFAULT_DESIGNS};
use crate::dataset::{self, AuditReport, Dataset, DatasetError, Design, GenParams, GroupKind, Split, SplitMode};
use crate::encode::{Direction, FeatureSet, InverterMode};
use crate::gnn::{self, embeddings_csv, Checkpoint, Corpus, GnnError, TrainConfig};
use crate::optimizer::{random_optimize, OptError};
use crate::transform::{apply, MatchingTransform, TransformError};

const DEFAULT_SEED: u64 = 1;
const DEFAULT_OUT: &str = "out";
/// Truth tables are printed only up to this many inputs.
const MAX_PRINT_INPUTS: usize = 16;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    User(String),
    #[error("{0}")]
    Internal(String),
    #[error("audit failed: {0} record(s) did not pass")]
    AuditFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 2,
            CliError::Internal(_) | CliError::AuditFailed(_) => 1,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { .. } | DatasetError::GenerationFailure { .. } => CliError::Internal(e.to_string()),
            _ => CliError::User(e.to_string()),
        }
    }
}

impl From<GnnError> for CliError {
    fn from(e: GnnError) -> Self {
        match e {
            GnnError::Io { .. } => CliError::Internal(e.to_string()),
            _ => CliError::User(e.to_string()),
        }
    }
}

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        CliError::User(e.to_string())
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "boolclass", version, about = "Matching-equivalent Boolean circuit classification")]
pub struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled dataset from base designs.
    Gen(GenArgs),
    /// Train a classifier on a generated dataset.
    Train(TrainArgs),
    /// Evaluate one or more checkpoints.
    Eval(EvalArgs),
    /// Re-check dataset labels against the oracle.
    Audit(AuditArgs),
    /// Apply, invert or optimize a single circuit.
    Transform(TransformArgs),
}

fn parse_kind(s: &str) -> Result<GroupKind, String> {
    GroupKind::parse(s).ok_or_else(|| format!("unknown group kind {s:?} (LE, Neg, Perm, NP)"))
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    match s.to_ascii_lowercase().as_str() {
        "digraph" => Ok(Direction::Digraph),
        "reverse" => Ok(Direction::Reverse),
        "bidigraph" => Ok(Direction::Bidigraph),
        _ => Err(format!("unknown direction {s:?} (digraph, reverse, bidigraph)")),
    }
}

fn parse_features(s: &str) -> Result<FeatureSet, String> {
    match s.to_ascii_lowercase().as_str() {
        "basic" => Ok(FeatureSet::Basic),
        "extended" => Ok(FeatureSet::Extended),
        _ => Err(format!("unknown feature set {s:?} (basic, extended)")),
    }
}

fn parse_inverters(s: &str) -> Result<InverterMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "with" => Ok(InverterMode::With),
        "without" => Ok(InverterMode::Without),
        _ => Err(format!("unknown inverter mode {s:?} (with, without)")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SplitArg {
    ByKind,
    ByCircuit,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenArgs {
    /// Comma-separated designs: `builtin:<id>` or AIGER paths.
    #[arg(long, value_delimiter = ',')]
    pub designs: Vec<String>,
    /// LE members per design.
    #[arg(long)]
    pub per_group: Option<usize>,
    #[arg(long)]
    pub min_len: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// Group kinds used for training with `--split by-kind`.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub train_kinds: Vec<GroupKind>,
    /// Per-class training fraction with `--split by-circuit`.
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_direction)]
    pub direction: Option<Direction>,
    #[arg(long, value_parser = parse_inverters)]
    pub inverters: Option<InverterMode>,
    #[arg(long, value_parser = parse_features)]
    pub features: Option<FeatureSet>,
    /// Re-split the manifest so that these kinds form the training set.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub train_kinds: Vec<GroupKind>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub pool_ratio: Option<f64>,
    /// Plain GCN without Top-K pooling.
    #[arg(long)]
    pub no_pool: bool,
    #[arg(long)]
    pub eval_every: Option<usize>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Checkpoint files (repeat or comma-separate); mean and std are taken
    /// across them.
    #[arg(long = "checkpoint", value_delimiter = ',')]
    pub checkpoints: Vec<PathBuf>,
    /// Re-split the manifest before evaluating.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    pub train_kinds: Vec<GroupKind>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformArgs {
    /// AIGER file or `builtin:<id>`.
    #[arg(long)]
    pub input: Option<String>,
    /// Inputs to negate, by name or index.
    #[arg(long, value_delimiter = ',')]
    pub neg_inputs: Vec<String>,
    /// Outputs to negate, by name or index.
    #[arg(long, value_delimiter = ',')]
    pub neg_outputs: Vec<String>,
    /// New input order: position `i` takes old input `perm[i]`.
    #[arg(long, alias = "perm", value_delimiter = ',')]
    pub perm_inputs: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub perm_outputs: Vec<usize>,
    /// Transform as JSON (e.g. a manifest record's `transform`).
    #[arg(long)]
    pub transform: Option<PathBuf>,
    /// Apply the inverse of the given transform.
    #[arg(long)]
    pub invert: bool,
    /// Run a random optimization recipe after the transform.
    #[arg(long)]
    pub optimize: bool,
    /// Recipe length for `--optimize`.
    #[arg(long)]
    pub len: Option<usize>,
    /// Output AIGER path (default `<out>/transformed.aag`).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Config file layout: global keys plus one table per subcommand.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    gen: GenArgs,
    train: TrainArgs,
    eval: EvalArgs,
    audit: AuditArgs,
    transform: TransformArgs,
}

macro_rules! fill {
    ($dst:ident, $src:ident; opt: $($o:ident),*; vec: $($v:ident),*; flag: $($f:ident),*) => {
        $( if $dst.$o.is_none() { $dst.$o = $src.$o; } )*
        $( if $dst.$v.is_empty() { $dst.$v = $src.$v; } )*
        $( $dst.$f |= $src.$f; )*
    };
}

impl GenArgs {
    fn merged(mut self, file: GenArgs) -> Self {
        fill!(self, file; opt: per_group, min_len, max_len, split, train_fraction; vec: designs, train_kinds; flag:);
        let d = GenParams::default();
        if self.designs.is_empty() {
            self.designs = DEFAULT_DESIGNS.iter().map(|id| format!("builtin:{id}")).collect();
        }
        self.per_group.get_or_insert(d.per_group);
        self.min_len.get_or_insert(d.min_len);
        self.max_len.get_or_insert(d.max_len);
        self.split.get_or_insert(SplitArg::ByKind);
        self
    }
}

impl TrainArgs {
    fn merged(mut self, file: TrainArgs) -> Self {
        fill!(self, file; opt: manifest, direction, inverters, features, epochs, hidden, lr, weight_decay, batch_size,
              pool_ratio, eval_every; vec: train_kinds; flag: no_pool);
        let d = TrainConfig::default();
        self.direction.get_or_insert(Direction::Bidigraph);
        self.inverters.get_or_insert(InverterMode::With);
        self.features.get_or_insert(FeatureSet::default());
        self.epochs.get_or_insert(d.epochs);
        self.hidden.get_or_insert(d.hidden);
        self.lr.get_or_insert(d.lr);
        self.weight_decay.get_or_insert(d.weight_decay);
        self.batch_size.get_or_insert(d.batch_size);
        if !self.no_pool {
            self.pool_ratio.get_or_insert(d.pool_ratio.unwrap_or(0.5));
        } else {
            self.pool_ratio = None;
        }
        self.eval_every.get_or_insert(d.eval_every);
        self
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden.unwrap(),
            lr: self.lr.unwrap(),
            weight_decay: self.weight_decay.unwrap(),
            batch_size: self.batch_size.unwrap(),
            epochs: self.epochs.unwrap(),
            pool_ratio: self.pool_ratio,
            eval_every: self.eval_every.unwrap(),
        }
    }
}

impl EvalArgs {
    fn merged(mut self, file: EvalArgs) -> Self {
        fill!(self, file; opt: manifest; vec: checkpoints, train_kinds; flag:);
        self
    }
}

impl AuditArgs {
    fn merged(mut self, file: AuditArgs) -> Self {
        fill!(self, file; opt: manifest; vec:; flag:);
        self
    }
}

impl TransformArgs {
    fn merged(mut self, file: TransformArgs) -> Self {
        fill!(self, file; opt: input, transform, len, output; vec: neg_inputs, neg_outputs, perm_inputs,
              perm_outputs; flag: invert, optimize);
        if self.optimize {
            self.len.get_or_insert(4);
        }
        self
    }
}

/// Global settings after merging flags over the config file.
#[derive(Debug, Serialize)]
struct Globals {
    seed: u64,
    jobs: Option<usize>,
    out: PathBuf,
}

#[derive(Serialize)]
struct Effective<'a, T: Serialize> {
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    jobs: Option<usize>,
    out: &'a Path,
    #[serde(flatten)]
    command: std::collections::BTreeMap<&'static str, &'a T>,
}

fn echo_config<T: Serialize>(g: &Globals, name: &'static str, args: &T) -> Result<(), CliError> {
    let eff = Effective {
        seed: g.seed,
        jobs: g.jobs,
        out: &g.out,
        command: [(name, args)].into_iter().collect(),
    };
    let text = toml::to_string(&eff).map_err(internal)?;
    write_file(&g.out.join(format!("{name}.config.toml")), &text)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::User(DatasetError::MissingFile(path.to_path_buf()).to_string()))
    }
}

fn require_manifest(m: &Option<PathBuf>) -> Result<&Path, CliError> {
    let p = m.as_deref().ok_or_else(|| CliError::User("--manifest is required".into()))?;
    require_file(p)?;
    Ok(p)
}

fn load_circuit(spec: &str) -> Result<(String, Circuit), CliError> {
    if let Some(id) = spec.strip_prefix("builtin:") {
        let c = builtin(id).map_err(|e| CliError::User(e.to_string()))?;
        return Ok((id.to_string(), c));
    }
    let path = Path::new(spec);
    require_file(path)?;
    let text = fs::read_to_string(path).map_err(internal)?;
    let c = parse_aag(&text).map_err(|source| CliError::User(DatasetError::ParseFailure { path: path.to_path_buf(), source }.to_string()))?;
    let name = path.file_stem().map_or(spec.to_string(), |s| s.to_string_lossy().into_owned());
    Ok((name.clone(), c.with_name(name)))
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let file: FileConfig = match &cli.config {
        Some(p) => {
            require_file(p)?;
            let text = fs::read_to_string(p).map_err(internal)?;
            toml::from_str(&text).map_err(|e| CliError::User(format!("bad config {}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let g = Globals {
        seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        jobs: cli.jobs.or(file.jobs),
        out: cli.out.or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    };
    if g.jobs == Some(0) {
        return Err(CliError::User("--jobs must be at least 1".into()));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = g.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(internal)?;
    fs::create_dir_all(&g.out).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", g.out.display())))?;

    pool.install(|| match cli.command {
        Command::Gen(a) => cmd_gen(&g, a.merged(file.gen)),
        Command::Train(a) => cmd_train(&g, a.merged(file.train)),
        Command::Eval(a) => cmd_eval(&g, a.merged(file.eval)),
        Command::Audit(a) => cmd_audit(&g, a.merged(file.audit)),
        Command::Transform(a) => cmd_transform(&g, a.merged(file.transform)),
    })
}

fn gen_split(a: &GenArgs, seed: u64) -> Result<SplitMode, CliError> {
    Ok(match a.split.unwrap_or(SplitArg::ByKind) {
        SplitArg::ByKind => SplitMode::ByGroupKind {
            train_kinds: if a.train_kinds.is_empty() { vec![GroupKind::LE] } else { a.train_kinds.clone() },
        },
        SplitArg::ByCircuit => SplitMode::ByCircuit {
            train_fraction: a
                .train_fraction
                .ok_or_else(|| CliError::User("--split by-circuit needs --train-fraction".into()))?,
            seed,
        },
    })
}

fn cmd_gen(g: &Globals, a: GenArgs) -> Result<(), CliError> {
    echo_config(g, "gen", &a)?;
    let designs = a
        .designs
        .iter()
        .map(|spec| {
            let (name, circuit) = load_circuit(spec)?;
            Ok(Design { name, source: spec.clone(), circuit })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let params = GenParams {
        per_group: a.per_group.unwrap(),
        min_len: a.min_len.unwrap(),
        max_len: a.max_len.unwrap(),
    };
    let mut ds = dataset::generate(&designs, &params, g.seed)?;
    ds.manifest = dataset::split(&ds.manifest, &gen_split(&a, g.seed)?)?;
    let path = dataset::save(&ds, &g.out)?;

    let m = &ds.manifest;
    println!("wrote {} ({} records, {} classes)", path.display(), m.records.len(), m.num_classes());
    println!("{:<6} {:>8} {:>8} {:>8}", "kind", "records", "train", "eval");
    for kind in GroupKind::ALL {
        let of = |s: Split| m.records.iter().filter(|r| r.kind == kind && r.split == s).count();
        println!("{:<6} {:>8} {:>8} {:>8}", kind.to_string(), m.count(kind), of(Split::Train), of(Split::Eval));
    }
    Ok(())
}

fn load_dataset(manifest: &Path, train_kinds: &[GroupKind]) -> Result<Dataset, CliError> {
    let mut ds = dataset::load(manifest)?;
    if !train_kinds.is_empty() {
        let mode = SplitMode::ByGroupKind { train_kinds: train_kinds.to_vec() };
        ds.manifest = dataset::split(&ds.manifest, &mode)?;
    }
    Ok(ds)
}

fn fmt_acc(a: Option<f64>) -> String {
    a.map_or("-".into(), |v| format!("{:.4}", v))
}

fn cmd_train(g: &Globals, a: TrainArgs) -> Result<(), CliError> {
    echo_config(g, "train", &a)?;
    let manifest = require_manifest(&a.manifest)?;
    let ds = load_dataset(manifest, &a.train_kinds)?;
    let (direction, inverters, features) = (a.direction.unwrap(), a.inverters.unwrap(), a.features.unwrap());
    let corpus = Corpus::from_dataset_with(&ds, direction, inverters, features);
    let cfg = a.train_config();
    let (model, history) = gnn::train(&corpus, &cfg, g.seed)?;
    Checkpoint::new(&model, &cfg, g.seed, direction, inverters, features).save(&g.out.join("checkpoint.json"))?;
    write_file(&g.out.join("history.csv"), &history.to_csv())?;

    println!("{:<6} {:>8} {:>8} {:>6}", "kind", "final", "best", "epoch");
    for kind in GroupKind::ALL {
        let best = history.best_acc(kind);
        println!(
            "{:<6} {:>8} {:>8} {:>6}",
            kind.to_string(),
            fmt_acc(history.final_acc(kind)),
            fmt_acc(best.map(|b| b.1)),
            best.map_or("-".into(), |b| b.0.to_string())
        );
    }
    Ok(())
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn cmd_eval(g: &Globals, a: EvalArgs) -> Result<(), CliError> {
    echo_config(g, "eval", &a)?;
    let manifest = require_manifest(&a.manifest)?;
    if a.checkpoints.is_empty() {
        return Err(CliError::User("at least one --checkpoint is required".into()));
    }
    let ds = load_dataset(manifest, &a.train_kinds)?;
    if !ds.manifest.records.iter().any(|r| r.split == Split::Eval) {
        return Err(GnnError::EmptyEval.into());
    }

    let mut per_kind: Vec<Vec<f64>> = vec![Vec::new(); 4];
    let mut runs = Vec::new();
    for (ci, path) in a.checkpoints.iter().enumerate() {
        require_file(path)?;
        let ck = Checkpoint::load(path)?;
        let model = ck.to_model()?;
        let corpus = Corpus::from_dataset_with(&ds, ck.direction, ck.inverters, ck.feature_set);
        let mut accs = serde_json::Map::new();
        for kind in GroupKind::ALL {
            let idx = corpus.kind_indices(kind);
            if idx.is_empty() {
                continue;
            }
            let acc = gnn::evaluate(&model, &corpus.pairs(&idx))?.accuracy;
            per_kind[kind as usize].push(acc);
            accs.insert(kind.to_string(), json!(acc));
        }
        let eval_idx = corpus.indices(Split::Eval);
        let overall = gnn::evaluate(&model, &corpus.pairs(&eval_idx))?;
        runs.push(json!({
            "checkpoint": path.display().to_string(),
            "seed": ck.seed,
            "direction": ck.direction,
            "inverters": ck.inverters,
            "features": ck.feature_set,
            "eval_accuracy": overall.accuracy,
            "acc": accs,
        }));
        if ci == 0 {
            let all: Vec<usize> = (0..corpus.samples.len()).collect();
            let ev = gnn::evaluate(&model, &corpus.pairs(&all))?;
            let rows: Vec<(usize, usize)> = corpus.samples.iter().map(|s| (s.record, s.label)).collect();
            write_file(&g.out.join("embeddings.csv"), &embeddings_csv(&rows, &ev.embeddings))?;
        }
    }
    let mut metrics = serde_json::Map::new();
    println!("{:<6} {:>8} {:>8}", "kind", "mean", "std");
    for kind in GroupKind::ALL {
        let xs = &per_kind[kind as usize];
        if xs.is_empty() {
            continue;
        }
        let (mean, std) = mean_std(xs);
        metrics.insert(format!("acc.{kind}.mean"), json!(mean));
        metrics.insert(format!("acc.{kind}.std"), json!(std));
        println!("{:<6} {:>8.4} {:>8.4}", kind.to_string(), mean, std);
    }
    metrics.insert("runs".into(), json!(runs));
    let text = serde_json::to_string_pretty(&metrics).map_err(internal)? + "\n";
    write_file(&g.out.join("metrics.json"), &text)
}

fn cmd_audit(g: &Globals, a: AuditArgs) -> Result<(), CliError> {
    echo_config(g, "audit", &a)?;
    let manifest = require_manifest(&a.manifest)?;
    let ds = dataset::load(manifest)?;
    let report: AuditReport = dataset::audit(&ds);
    let text = serde_json::to_string_pretty(&report).map_err(internal)? + "\n";
    write_file(&g.out.join("audit.json"), &text)?;
    for w in &report.warnings {
        println!("warning: {w}");
    }
    let failed: Vec<_> = report.failures().collect();
    println!(
        "{} records: {} canonical-key checked, {} signature only, {} failed",
        report.records.len(),
        report.canonical_checked,
        report.signature_only,
        failed.len()
    );
    for r in &failed {
        println!("FAIL record {} (label {}, {})", r.index, r.label, r.kind);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::AuditFailed(failed.len()))
    }
}

fn resolve_port(name: &str, find: impl Fn(&str) -> Option<usize>, count: usize, what: &str) -> Result<usize, CliError> {
    find(name)
        .or_else(|| name.parse().ok().filter(|&i| i < count))
        .ok_or_else(|| CliError::User(format!("no {what} named {name:?}")))
}

fn build_transform(a: &TransformArgs, c: &Circuit) -> Result<MatchingTransform, CliError> {
    let (n, m) = (c.num_inputs(), c.num_outputs());
    if let Some(p) = &a.transform {
        require_file(p)?;
        let text = fs::read_to_string(p).map_err(internal)?;
        return serde_json::from_str(&text).map_err(|e| CliError::User(format!("bad transform {}: {e}", p.display())));
    }
    let mut t = MatchingTransform::identity(n, m);
    for name in &a.neg_inputs {
        t.input_neg[resolve_port(name, |s| c.find_input(s), n, "input")?] = true;
    }
    for name in &a.neg_outputs {
        t.output_neg[resolve_port(name, |s| c.find_output(s), m, "output")?] = true;
    }
    if !a.perm_inputs.is_empty() {
        t.input_perm = a.perm_inputs.clone();
    }
    if !a.perm_outputs.is_empty() {
        t.output_perm = a.perm_outputs.clone();
    }
    t.check()?;
    Ok(t)
}

fn cmd_transform(g: &Globals, a: TransformArgs) -> Result<(), CliError> {
    echo_config(g, "transform", &a)?;
    let spec = a.input.as_deref().ok_or_else(|| CliError::User("--input is required".into()))?;
    let (_, c) = load_circuit(spec)?;
    let mut t = build_transform(&a, &c)?;
    if a.invert {
        t = t.invert();
    }
    let mut result = apply(&c, &t)?;
    let text = serde_json::to_string_pretty(&t).map_err(internal)? + "\n";
    write_file(&g.out.join("transform.json"), &text)?;
    if a.optimize {
        let len = a.len.unwrap();
        let (opt, recipe) = random_optimize(&result, g.seed, len, len).map_err(|e| match e {
            OptError::BadLength { .. } => CliError::User(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        })?;
        let text = serde_json::to_string_pretty(&recipe).map_err(internal)? + "\n";
        write_file(&g.out.join("recipe.json"), &text)?;
        result = opt;
    }
    let output = a.output.clone().unwrap_or_else(|| g.out.join("transformed.aag"));
    write_file(&output, &write_aag(&result))?;
    println!("wrote {} ({} inputs, {} outputs, {} ANDs)", output.display(), result.num_inputs(), result.num_outputs(), result.num_ands());
    if result.num_inputs() <= MAX_PRINT_INPUTS {
        let tt = simulate_exhaustive(&result).map_err(internal)?;
        for (j, hex) in tt.to_hex_all().iter().enumerate() {
            println!("{} = {hex}", result.output_label(j));
        }
    }
    Ok(())
}
