//! Problem corpus: a `corpus.json` manifest plus one exchange file per problem.
//!
//! ```json
//! {
//!   "name": "mini", "version": "1.0",
//!   "entries": [
//!     {"file": "GEO0001.gf.json", "axiom_system": "euclidean",
//!      "conjecture_type": "constructive", "expected_status": "proved",
//!      "informal_proof": "...", "source": "..."}
//!   ]
//! }
//! ```
//!
//! Unknown keys, at either level, are kept and written back untouched.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geoform::{self, GeoError, GeoProblem};

pub const MANIFEST_FILE: &str = "corpus.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus manifest not found: {0}")]
    ManifestNotFound(PathBuf),
    #[error("corpus manifest {path}: {message}")]
    ManifestSchema { path: PathBuf, message: String },
    #[error("corpus {0} failed validation")]
    Invalid(PathBuf, Box<ValidationReport>),
    #[error("unknown problem id {0}")]
    UnknownId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomSystem {
    Neutral,
    Euclidean,
    Hyperbolic,
    Projective,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjectureType {
    Constructive,
    RulerCompass,
    Inequality,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedStatus {
    Proved,
    Disproved,
    Open,
}

macro_rules! snake_enum_from_str {
    ($ty:ty) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                serde_json::from_value(Value::String(s.to_string()))
                    .map_err(|_| format!("invalid value `{s}`"))
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match serde_json::to_value(self) {
                    Ok(Value::String(s)) => f.write_str(&s),
                    _ => Err(fmt::Error),
                }
            }
        }
    };
}

snake_enum_from_str!(AxiomSystem);
snake_enum_from_str!(ConjectureType);
snake_enum_from_str!(ExpectedStatus);

/// One manifest entry as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub file: String,
    pub axiom_system: AxiomSystem,
    pub conjecture_type: ConjectureType,
    pub expected_status: ExpectedStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informal_proof: Option<String>,
    #[serde(default)]
    pub source: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub name: String,
    pub version: String,
    pub entries: Vec<EntryMeta>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// A loaded problem with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemEntry {
    pub problem: GeoProblem,
    pub meta: EntryMeta,
}

impl ProblemEntry {
    pub fn id(&self) -> &str {
        self.problem.id.as_str()
    }
}

/// Immutable, validated corpus snapshot.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub manifest_path: PathBuf,
    pub manifest: CorpusManifest,
    entries: Vec<ProblemEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryFailure {
    MissingFile { path: PathBuf },
    Unreadable { path: PathBuf, message: String },
    Invalid { message: String },
    DuplicateId { id: String, first_file: String },
}

impl fmt::Display for EntryFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryFailure::MissingFile { path } => write!(f, "missing file {}", path.display()),
            EntryFailure::Unreadable { path, message } => write!(f, "cannot read {}: {message}", path.display()),
            EntryFailure::Invalid { message } => write!(f, "{message}"),
            EntryFailure::DuplicateId { id, first_file } => {
                write!(f, "duplicate id {id} (first defined in {first_file})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub file: String,
    pub id: Option<String>,
    pub failures: Vec<EntryFailure>,
}

impl EntryReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub manifest: PathBuf,
    pub entries: Vec<EntryReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(EntryReport::passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &EntryReport> {
        self.entries.iter().filter(|e| !e.passed())
    }
}

/// Accepts either a corpus directory or the manifest file itself.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

pub fn read_manifest(path: &Path) -> Result<(PathBuf, CorpusManifest), CorpusError> {
    let mpath = manifest_path(path);
    let text = std::fs::read_to_string(&mpath).map_err(|_| CorpusError::ManifestNotFound(mpath.clone()))?;
    let manifest = serde_json::from_str(&text)
        .map_err(|e| CorpusError::ManifestSchema { path: mpath.clone(), message: e.to_string() })?;
    Ok((mpath, manifest))
}

fn check_entries(mpath: &Path, manifest: &CorpusManifest) -> (ValidationReport, Vec<ProblemEntry>) {
    let base = mpath.parent().unwrap_or(Path::new("."));
    let mut seen: HashMap<String, String> = HashMap::new();
    let mut reports = Vec::with_capacity(manifest.entries.len());
    let mut loaded = Vec::new();
    for meta in &manifest.entries {
        let path = base.join(&meta.file);
        let mut report = EntryReport { file: meta.file.clone(), id: None, failures: Vec::new() };
        match load_problem_file(&path) {
            Err(f) => report.failures.push(f),
            Ok(problem) => {
                let id = problem.id.to_string();
                report.id = Some(id.clone());
                if let Some(first) = seen.get(&id) {
                    report.failures.push(EntryFailure::DuplicateId { id, first_file: first.clone() });
                } else {
                    seen.insert(id, meta.file.clone());
                    loaded.push(ProblemEntry { problem, meta: meta.clone() });
                }
            }
        }
        reports.push(report);
    }
    (ValidationReport { manifest: mpath.to_path_buf(), entries: reports }, loaded)
}

fn load_problem_file(path: &Path) -> Result<GeoProblem, EntryFailure> {
    if !path.is_file() {
        return Err(EntryFailure::MissingFile { path: path.to_path_buf() });
    }
    let bytes = std::fs::read(path)
        .map_err(|e| EntryFailure::Unreadable { path: path.to_path_buf(), message: e.to_string() })?;
    let invalid = |e: GeoError| EntryFailure::Invalid { message: e.to_string() };
    let is_gclc = path.extension().is_some_and(|e| e == "gcl");
    if is_gclc {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| EntryFailure::Invalid { message: "file is not UTF-8".into() })?;
        geoform::parse_gclc_with_id(text, stem).map_err(invalid)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| EntryFailure::Invalid { message: "file is not UTF-8".into() })?;
        geoform::read_exchange_str(text).map_err(invalid)
    }
}

/// Checks every manifest entry. Never writes to the corpus.
pub fn validate_corpus(path: &Path) -> Result<ValidationReport, CorpusError> {
    let (mpath, manifest) = read_manifest(path)?;
    Ok(check_entries(&mpath, &manifest).0)
}

impl Corpus {
    /// Loads and validates; any failing entry makes the whole load fail.
    pub fn load(path: &Path) -> Result<Corpus, CorpusError> {
        let (mpath, manifest) = read_manifest(path)?;
        let (report, mut entries) = check_entries(&mpath, &manifest);
        if !report.passed() {
            return Err(CorpusError::Invalid(mpath, Box::new(report)));
        }
        entries.sort_by(|a, b| a.id().cmp(b.id()));
        Ok(Corpus { manifest_path: mpath, manifest, entries })
    }

    /// Entries sorted by id.
    pub fn entries(&self) -> &[ProblemEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&ProblemEntry> {
        self.entries.binary_search_by(|e| e.id().cmp(id)).ok().map(|i| &self.entries[i])
    }

    pub fn select(&self, filter: &Filter) -> Result<Vec<&ProblemEntry>, CorpusError> {
        select_problems(self, filter)
    }
}

/// Conjunction across dimensions, disjunction within one. Empty means all.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Filter {
    pub axiom_systems: Vec<AxiomSystem>,
    pub conjecture_types: Vec<ConjectureType>,
    pub ids: Vec<String>,
}

impl Filter {
    fn admits(&self, e: &ProblemEntry) -> bool {
        (self.axiom_systems.is_empty() || self.axiom_systems.contains(&e.meta.axiom_system))
            && (self.conjecture_types.is_empty() || self.conjecture_types.contains(&e.meta.conjecture_type))
            && (self.ids.is_empty() || self.ids.iter().any(|id| id == e.id()))
    }
}

/// Selected entries, sorted by id, without duplicates.
pub fn select_problems<'c>(corpus: &'c Corpus, filter: &Filter) -> Result<Vec<&'c ProblemEntry>, CorpusError> {
    if let Some(missing) = filter.ids.iter().find(|id| corpus.get(id).is_none()) {
        return Err(CorpusError::UnknownId(missing.clone()));
    }
    // entries are kept sorted and unique by id
    Ok(corpus.entries.iter().filter(|e| filter.admits(e)).collect())
}
