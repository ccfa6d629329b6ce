//! Labelled dataset generation: per design, a logic-equivalent (LE) group
//! from random optimization, then one negated, one permuted and one
//! negated-plus-permuted variant of every LE member.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::{depth, parse_aag, simulate_random, write_aag, AigError, Circuit};
use crate::optimizer::{mix_seed, random_optimize, OptRecipe, DEFAULT_MAX_LEN, DEFAULT_MIN_LEN};
use crate::oracle::{canonical_key_with_budget, within_budget, DEFAULT_BUDGET};
use crate::transform::{apply, random_transform, MatchingTransform, TransformKind};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
/// Signature width used by the audit.
const AUDIT_WORDS: usize = crate::aig::DEFAULT_SIGNATURE_WORDS;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no designs given")]
    NoDesigns,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("design {name:?} is not a valid circuit: {source}")]
    InvalidDesign { name: String, source: AigError },
    #[error("could not produce a structurally distinct variant of design {design} (member {member})")]
    GenerationFailure { design: String, member: usize },
    #[error("class {0} would have no training records")]
    EmptySplit(usize),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("manifest schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("failed to parse {path}: {source}")]
    ParseFailure { path: PathBuf, source: AigError },
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupKind {
    LE,
    Neg,
    Perm,
    NP,
}

impl GroupKind {
    pub const ALL: [GroupKind; 4] = [GroupKind::LE, GroupKind::Neg, GroupKind::Perm, GroupKind::NP];

    pub fn transform_kind(self) -> Option<TransformKind> {
        match self {
            GroupKind::LE => None,
            GroupKind::Neg => Some(TransformKind::Neg),
            GroupKind::Perm => Some(TransformKind::Perm),
            GroupKind::NP => Some(TransformKind::NegPerm),
        }
    }

    pub fn parse(s: &str) -> Option<GroupKind> {
        GroupKind::ALL.into_iter().find(|k| k.to_string().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKind::LE => "LE",
            GroupKind::Neg => "Neg",
            GroupKind::Perm => "Perm",
            GroupKind::NP => "NP",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub per_group: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            per_group: 30,
            min_len: DEFAULT_MIN_LEN,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SplitMode {
    ByGroupKind { train_kinds: Vec<GroupKind> },
    ByCircuit { train_fraction: f64, seed: u64 },
}

impl Default for SplitMode {
    fn default() -> Self {
        SplitMode::ByGroupKind {
            train_kinds: vec![GroupKind::LE],
        }
    }
}

/// A base design as supplied by the caller.
#[derive(Clone, Debug)]
pub struct Design {
    pub name: String,
    /// `builtin:<id>` or a file path.
    pub source: String,
    pub circuit: Circuit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignEntry {
    pub name: String,
    pub source: String,
    pub file: String,
    pub label: usize,
    pub num_inputs: usize,
    pub num_outputs: usize,
    /// Present when the oracle budget allows exhaustive canonicalization.
    pub canonical_key: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub index: usize,
    pub file: String,
    pub design: usize,
    pub label: usize,
    pub kind: GroupKind,
    /// Recipe that produced the LE member this record derives from.
    pub recipe: OptRecipe,
    /// Matching transform applied to the LE member (absent for LE records).
    pub transform: Option<MatchingTransform>,
    /// Index of the LE record this variant was derived from.
    pub parent: Option<usize>,
    pub split: Split,
    pub num_ands: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub params: GenParams,
    pub split: SplitMode,
    pub designs: Vec<DesignEntry>,
    pub records: Vec<Record>,
}

impl Manifest {
    pub fn num_classes(&self) -> usize {
        self.designs.iter().map(|d| d.label + 1).max().unwrap_or(0)
    }

    pub fn count(&self, kind: GroupKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Manifest plus the circuits it describes, in record order.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: Manifest,
    pub designs: Vec<Circuit>,
    pub circuits: Vec<Circuit>,
}

fn record_seed(seed: u64, design: usize, member: usize, kind: GroupKind) -> u64 {
    let salt = (member as u64) << 2 | kind as u64;
    mix_seed(mix_seed(seed, design as u64), salt)
}

/// Runs the generation flow. Labels are design indices; records are ordered
/// by design, then LE member, then kind (LE, Neg, Perm, NP). The default
/// split trains on LE only.
pub fn generate(designs: &[Design], params: &GenParams, seed: u64) -> Result<Dataset, DatasetError> {
    if designs.is_empty() {
        return Err(DatasetError::NoDesigns);
    }
    if params.per_group == 0 {
        return Err(DatasetError::InvalidParameter("per_group must be at least 1".into()));
    }
    if params.min_len == 0 || params.min_len > params.max_len {
        return Err(DatasetError::InvalidParameter(format!(
            "recipe length range [{}, {}] is empty",
            params.min_len, params.max_len
        )));
    }
    for d in designs {
        if let Some(e) = d.circuit.validate().first() {
            return Err(DatasetError::InvalidDesign {
                name: d.name.clone(),
                source: AigError::Invalid(vec![e.clone()]),
            });
        }
    }

    let jobs: Vec<(usize, usize)> = (0..designs.len())
        .flat_map(|d| (0..params.per_group).map(move |i| (d, i)))
        .collect();
    let groups: Vec<Vec<(Circuit, GroupKind, OptRecipe, Option<MatchingTransform>)>> = jobs
        .par_iter()
        .map(|&(d, i)| {
            let base = &designs[d].circuit;
            let (le, recipe) =
                random_optimize(base, record_seed(seed, d, i, GroupKind::LE), params.min_len, params.max_len)
                    .map_err(|_| DatasetError::GenerationFailure {
                        design: designs[d].name.clone(),
                        member: i,
                    })?;
            let mut out = Vec::with_capacity(4);
            for kind in [GroupKind::Neg, GroupKind::Perm, GroupKind::NP] {
                let t = random_transform(
                    le.num_inputs(),
                    le.num_outputs(),
                    kind.transform_kind().unwrap(),
                    record_seed(seed, d, i, kind),
                );
                let c = apply(&le, &t).expect("transform built for these dimensions");
                out.push((c, kind, recipe.clone(), Some(t)));
            }
            out.insert(0, (le, GroupKind::LE, recipe, None));
            Ok(out)
        })
        .collect::<Result<_, DatasetError>>()?;

    let design_entries: Vec<DesignEntry> = designs
        .iter()
        .enumerate()
        .map(|(d, des)| DesignEntry {
            name: des.name.clone(),
            source: des.source.clone(),
            file: format!("designs/d{d:03}.aag"),
            label: d,
            num_inputs: des.circuit.num_inputs(),
            num_outputs: des.circuit.num_outputs(),
            canonical_key: canonical_key_with_budget(&des.circuit, DEFAULT_BUDGET)
                .ok()
                .map(|k| k.to_string()),
        })
        .collect();

    let mut records = Vec::new();
    let mut circuits = Vec::new();
    for ((d, _), group) in jobs.iter().zip(groups) {
        let parent = records.len();
        for (c, kind, recipe, transform) in group {
            let index = records.len();
            records.push(Record {
                index,
                file: format!("circuits/r{index:05}.aag"),
                design: *d,
                label: *d,
                kind,
                recipe,
                transform,
                parent: (kind != GroupKind::LE).then_some(parent),
                split: Split::Eval,
                num_ands: c.num_ands(),
                depth: depth(&c),
            });
            circuits.push(c);
        }
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        seed,
        params: params.clone(),
        split: SplitMode::default(),
        designs: design_entries,
        records,
    };
    let manifest = split(&manifest, &SplitMode::default())?;
    Ok(Dataset {
        manifest,
        designs: designs.iter().map(|d| d.circuit.clone()).collect(),
        circuits,
    })
}

/// Re-assigns train/eval membership. Fails if some class ends up without
/// training records.
pub fn split(m: &Manifest, mode: &SplitMode) -> Result<Manifest, DatasetError> {
    let mut out = m.clone();
    out.split = mode.clone();
    match mode {
        SplitMode::ByGroupKind { train_kinds } => {
            for r in &mut out.records {
                r.split = if train_kinds.contains(&r.kind) { Split::Train } else { Split::Eval };
            }
        }
        SplitMode::ByCircuit { train_fraction, seed } => {
            if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                return Err(DatasetError::InvalidParameter(format!(
                    "train fraction {train_fraction} is outside (0, 1)"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for class in 0..out.num_classes() {
                let mut members: Vec<usize> =
                    out.records.iter().filter(|r| r.label == class).map(|r| r.index).collect();
                members.shuffle(&mut rng);
                let k = (train_fraction * members.len() as f64).round() as usize;
                for (pos, &i) in members.iter().enumerate() {
                    out.records[i].split = if pos < k { Split::Train } else { Split::Eval };
                }
            }
        }
    }
    for class in 0..out.num_classes() {
        let has_records = out.records.iter().any(|r| r.label == class);
        let has_train = out.records.iter().any(|r| r.label == class && r.split == Split::Train);
        if has_records && !has_train {
            return Err(DatasetError::EmptySplit(class));
        }
    }
    Ok(out)
}

/// Writes `manifest.json`, `designs/*.aag`, `circuits/*.aag` and `sizes.csv`.
pub fn save(ds: &Dataset, dir: &Path) -> Result<PathBuf, DatasetError> {
    for sub in ["designs", "circuits"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(io_err(&p))?;
    }
    let write = |rel: &str, text: String| -> Result<(), DatasetError> {
        let p = dir.join(rel);
        fs::write(&p, text).map_err(io_err(&p))
    };
    for (entry, c) in ds.manifest.designs.iter().zip(&ds.designs) {
        write(&entry.file, write_aag(c))?;
    }
    for (r, c) in ds.manifest.records.iter().zip(&ds.circuits) {
        write(&r.file, write_aag(c))?;
    }
    let mut sizes = String::from("record,label,kind,ands,depth\n");
    for r in &ds.manifest.records {
        sizes.push_str(&format!("{},{},{},{},{}\n", r.index, r.label, r.kind, r.num_ands, r.depth));
    }
    write("sizes.csv", sizes)?;
    write(MANIFEST_FILE, ds.manifest.to_json())?;
    Ok(dir.join(MANIFEST_FILE))
}

fn read_circuit(path: &Path) -> Result<Circuit, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_aag(&text).map_err(|source| DatasetError::ParseFailure { path: path.to_path_buf(), source })
}

pub fn read_manifest(path: &Path) -> Result<Manifest, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| DatasetError::SchemaMismatch(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        other => {
            return Err(DatasetError::SchemaMismatch(format!(
                "expected schema_version {SCHEMA_VERSION}, found {other:?}"
            )))
        }
    }
    serde_json::from_value(value).map_err(|e| DatasetError::SchemaMismatch(e.to_string()))
}

/// Loads a saved dataset; every referenced circuit must exist and parse.
pub fn load(manifest_path: &Path) -> Result<Dataset, DatasetError> {
    let manifest = read_manifest(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let designs = manifest
        .designs
        .iter()
        .map(|d| read_circuit(&dir.join(&d.file)))
        .collect::<Result<Vec<_>, _>>()?;
    let circuits = manifest
        .records
        .iter()
        .map(|r| read_circuit(&dir.join(&r.file)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset { manifest, designs, circuits })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordAudit {
    pub index: usize,
    pub label: usize,
    pub kind: GroupKind,
    /// Recovered function (after undoing the recorded transform) matches the
    /// design carrying this record's label.
    pub functional: bool,
    /// Canonical-key comparison, when the oracle budget allows it.
    pub canonical: Option<bool>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub records: Vec<RecordAudit>,
    pub canonical_checked: usize,
    pub signature_only: usize,
    pub warnings: Vec<String>,
    pub all_pass: bool,
}

impl AuditReport {
    pub fn failures(&self) -> impl Iterator<Item = &RecordAudit> {
        self.records.iter().filter(|r| !r.pass)
    }
}

/// Checks every record against the design whose label it carries: signature
/// equality after undoing the recorded transform, plus canonical-key equality
/// for designs small enough for exhaustive search.
pub fn audit(ds: &Dataset) -> AuditReport {
    let m = &ds.manifest;
    let mut warnings = Vec::new();
    let design_keys: Vec<Option<String>> = ds
        .designs
        .iter()
        .map(|c| canonical_key_with_budget(c, DEFAULT_BUDGET).ok().map(|k| k.to_string()))
        .collect();
    for i in 0..design_keys.len() {
        for j in 0..i {
            if design_keys[i].is_some() && design_keys[i] == design_keys[j] {
                warnings.push(format!(
                    "designs {} and {} are matching-equivalent but carry different labels",
                    m.designs[j].name, m.designs[i].name
                ));
            }
        }
    }
    for (d, entry) in m.designs.iter().enumerate() {
        if design_keys[d].is_none() {
            warnings.push(format!(
                "design {} ({}x{}) exceeds the oracle budget; signature audit only",
                entry.name, entry.num_inputs, entry.num_outputs
            ));
        }
    }

    let records: Vec<RecordAudit> = m
        .records
        .par_iter()
        .zip(ds.circuits.par_iter())
        .map(|(r, c)| {
            let design = m.designs.iter().position(|d| d.label == r.label);
            let (functional, canonical) = match design {
                None => (false, None),
                Some(d) => {
                    let base = &ds.designs[d];
                    let recovered = match &r.transform {
                        Some(t) => apply(c, &t.invert()).ok(),
                        None => Some(c.clone()),
                    };
                    let same_dims = (c.num_inputs(), c.num_outputs()) == (base.num_inputs(), base.num_outputs());
                    let functional = same_dims
                        && recovered.is_some_and(|rc| {
                            simulate_random(&rc, m.seed, AUDIT_WORDS) == simulate_random(base, m.seed, AUDIT_WORDS)
                        });
                    let canonical = match &design_keys[d] {
                        Some(k) if within_budget(c.num_inputs(), c.num_outputs(), DEFAULT_BUDGET) => Some(
                            canonical_key_with_budget(c, DEFAULT_BUDGET).is_ok_and(|ck| ck.to_string() == *k),
                        ),
                        _ => None,
                    };
                    (functional, canonical)
                }
            };
            RecordAudit {
                index: r.index,
                label: r.label,
                kind: r.kind,
                functional,
                canonical,
                pass: functional && canonical != Some(false),
            }
        })
        .collect();
    let canonical_checked = records.iter().filter(|r| r.canonical.is_some()).count();
    AuditReport {
        all_pass: records.iter().all(|r| r.pass),
        signature_only: records.len() - canonical_checked,
        canonical_checked,
        records,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::builtin;

    fn design(id: &str) -> Design {
        Design {
            name: id.to_string(),
            source: format!("builtin:{id}"),
            circuit: builtin(id).unwrap(),
        }
    }

    fn small() -> Dataset {
        let params = GenParams { per_group: 4, ..GenParams::default() };
        generate(&[design("fulladder1")], &params, 1).unwrap()
    }

    #[test]
    fn counts_and_labels() {
        let ds = small();
        let m = &ds.manifest;
        assert_eq!(m.records.len(), 16);
        for kind in GroupKind::ALL {
            assert_eq!(m.count(kind), 4);
        }
        assert!(m.records.iter().all(|r| r.label == 0));
        assert!(m.records.iter().all(|r| (r.split == Split::Train) == (r.kind == GroupKind::LE)));
    }

    #[test]
    fn deterministic() {
        assert_eq!(small().manifest.to_json(), small().manifest.to_json());
    }

    #[test]
    fn stratified_split() {
        let params = GenParams { per_group: 2, ..GenParams::default() };
        let ds = generate(&[design("fulladder1"), design("mux2")], &params, 5).unwrap();
        let m = split(&ds.manifest, &SplitMode::ByCircuit { train_fraction: 0.5, seed: 3 }).unwrap();
        for class in 0..2 {
            let train = m.records.iter().filter(|r| r.label == class && r.split == Split::Train).count();
            assert_eq!(train, 4);
        }
        let none = SplitMode::ByGroupKind { train_kinds: vec![] };
        assert!(matches!(split(&ds.manifest, &none), Err(DatasetError::EmptySplit(0))));
    }

    #[test]
    fn audit_passes_and_catches_corruption() {
        let mut ds = generate(
            &[design("fulladder1"), design("mux2")],
            &GenParams { per_group: 3, ..GenParams::default() },
            2,
        )
        .unwrap();
        let report = audit(&ds);
        assert!(report.all_pass, "{:?}", report.failures().collect::<Vec<_>>());
        assert_eq!(report.canonical_checked, 24);
        ds.manifest.records[5].label = 1;
        let report = audit(&ds);
        assert_eq!(report.failures().map(|r| r.index).collect::<Vec<_>>(), vec![5]);
    }
}
