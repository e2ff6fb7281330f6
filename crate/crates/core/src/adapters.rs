//! Declarative prover adapters.
//!
//! An adapter file is `{"adapters": [AdapterSpec, ...]}`. Each spec names the
//! command line to run (`{input}` is replaced by the problem file name,
//! relative to the job's scratch directory, and `{workdir}` by that
//! directory's absolute path), the dialect the prover reads, and the ordered
//! rules that turn combined stdout+stderr into a [`Verdict`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geoform::Dialect;

pub const INPUT_PLACEHOLDER: &str = "{input}";
pub const WORKDIR_PLACEHOLDER: &str = "{workdir}";

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("cannot read adapter file {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("adapter schema error: {0}")]
    Schema(String),
    #[error("duplicate adapter name `{0}`")]
    DuplicateName(String),
    #[error("adapter `{adapter}`: bad pattern {pattern:?}: {message}")]
    BadPattern { adapter: String, pattern: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Proved,
    Disproved,
    Unknown,
    Timeout,
    #[serde(rename = "memout")]
    MemOut,
    Error,
    Unparseable,
}

impl Verdict {
    pub const ALL: [Verdict; 7] = [
        Verdict::Proved,
        Verdict::Disproved,
        Verdict::Unknown,
        Verdict::Timeout,
        Verdict::MemOut,
        Verdict::Error,
        Verdict::Unparseable,
    ];

    /// Proved or Disproved.
    pub fn is_definite(self) -> bool {
        matches!(self, Verdict::Proved | Verdict::Disproved)
    }

    /// Verdicts only the runner may assign.
    pub fn is_limit(self) -> bool {
        matches!(self, Verdict::Timeout | Verdict::MemOut)
    }

    /// One-letter code used in result matrices.
    pub fn code(self) -> &'static str {
        match self {
            Verdict::Proved => "P",
            Verdict::Disproved => "D",
            Verdict::Unknown => "U",
            Verdict::Timeout => "T",
            Verdict::MemOut => "M",
            Verdict::Error => "E",
            Verdict::Unparseable => "X",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Proved => "proved",
            Verdict::Disproved => "disproved",
            Verdict::Unknown => "unknown",
            Verdict::Timeout => "timeout",
            Verdict::MemOut => "memout",
            Verdict::Error => "error",
            Verdict::Unparseable => "unparseable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readability {
    Maybe,
    NotAvailable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rule {
    pub pattern: String,
    pub verdict: Verdict,
    #[serde(skip)]
    regex: Option<Regex>,
}

impl Rule {
    pub fn new(pattern: &str, verdict: Verdict) -> Result<Rule, regex::Error> {
        Ok(Rule { pattern: pattern.to_string(), verdict, regex: Some(Regex::new(pattern)?) })
    }

    fn matches(&self, text: &str) -> bool {
        match &self.regex {
            Some(re) => re.is_match(text),
            // specs built through serde are compiled in `AdapterSpec::validate`
            None => Regex::new(&self.pattern).is_ok_and(|re| re.is_match(text)),
        }
    }
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.pattern == other.pattern && self.verdict == other.verdict
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterSpec {
    pub name: String,
    #[serde(default)]
    pub method: String,
    pub input_dialect: Dialect,
    /// Overrides the dialect's default file extension (without the dot).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_extension: Option<String>,
    pub command_template: Vec<String>,
    #[serde(default)]
    pub classification_rules: Vec<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code_map: Option<BTreeMap<i32, Verdict>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof_artifact: Option<String>,
    pub readable_proofs: Readability,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl AdapterSpec {
    /// Checks the spec invariants and compiles its patterns.
    pub fn validate(&mut self) -> Result<(), AdapterError> {
        let schema = |m: String| AdapterError::Schema(format!("adapter `{}`: {m}", self.name));
        if self.name.trim().is_empty() {
            return Err(AdapterError::Schema("adapter with empty name".into()));
        }
        if self.command_template.is_empty() {
            return Err(schema("command_template is empty".into()));
        }
        let inputs: usize = self.command_template.iter().map(|a| a.matches(INPUT_PLACEHOLDER).count()).sum();
        if inputs != 1 {
            return Err(schema(format!("{INPUT_PLACEHOLDER} must appear exactly once, found {inputs}")));
        }
        if self.classification_rules.is_empty() && self.exit_code_map.is_none() {
            return Err(schema("needs classification_rules or exit_code_map".into()));
        }
        let limit_in_map = self.exit_code_map.iter().flat_map(|m| m.values()).any(|v| v.is_limit());
        if self.classification_rules.iter().any(|r| r.verdict.is_limit()) || limit_in_map {
            return Err(schema("timeout and memout are assigned by the runner only".into()));
        }
        for rule in &mut self.classification_rules {
            let re = Regex::new(&rule.pattern).map_err(|e| AdapterError::BadPattern {
                adapter: self.name.clone(),
                pattern: rule.pattern.clone(),
                message: e.to_string(),
            })?;
            rule.regex = Some(re);
        }
        Ok(())
    }

    pub fn input_extension(&self) -> &str {
        self.input_extension.as_deref().unwrap_or(self.input_dialect.default_extension())
    }

    pub fn input_file_name(&self, problem_id: &str) -> String {
        format!("{problem_id}.{}", self.input_extension())
    }

    /// Command line with placeholders filled in.
    pub fn render_command(&self, input: &str, workdir: &Path) -> Vec<String> {
        let wd = workdir.to_string_lossy();
        self.command_template
            .iter()
            .map(|a| a.replace(INPUT_PLACEHOLDER, input).replace(WORKDIR_PLACEHOLDER, &wd))
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AdapterFile {
    adapters: Vec<serde_json::Value>,
}

pub fn load_adapters(path: &Path) -> Result<Vec<AdapterSpec>, AdapterError> {
    let text = std::fs::read_to_string(path).map_err(|source| AdapterError::Io { path: path.to_path_buf(), source })?;
    parse_adapters(&text)
}

pub fn parse_adapters(text: &str) -> Result<Vec<AdapterSpec>, AdapterError> {
    let file: AdapterFile = serde_json::from_str(text).map_err(|e| AdapterError::Schema(e.to_string()))?;
    let mut names = HashSet::new();
    let mut specs = Vec::with_capacity(file.adapters.len());
    for (i, v) in file.adapters.into_iter().enumerate() {
        let mut spec: AdapterSpec =
            serde_json::from_value(v).map_err(|e| AdapterError::Schema(format!("adapters[{i}]: {e}")))?;
        spec.validate()?;
        if !names.insert(spec.name.clone()) {
            return Err(AdapterError::DuplicateName(spec.name));
        }
        specs.push(spec);
    }
    Ok(specs)
}

/// First matching rule wins, then the exit-code map, else `Unparseable`.
pub fn classify_output(spec: &AdapterSpec, output: &str, exit_code: Option<i32>) -> Verdict {
    if let Some(rule) = spec.classification_rules.iter().find(|r| r.matches(output)) {
        return rule.verdict;
    }
    exit_code
        .and_then(|c| spec.exit_code_map.as_ref()?.get(&c).copied())
        .unwrap_or(Verdict::Unparseable)
}

/// Locates the program of a command line. Names containing `/` are taken
/// relative to the current directory; bare names are searched in
/// `extra_dirs` and then `PATH`.
pub fn resolve_program(program: &str, extra_dirs: &[PathBuf]) -> Option<PathBuf> {
    if program.contains('/') {
        let p = Path::new(program);
        let abs = if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir().ok()?.join(p) };
        return is_executable(&abs).then_some(abs);
    }
    let path_dirs = std::env::var_os("PATH").map(|p| std::env::split_paths(&p).collect::<Vec<_>>()).unwrap_or_default();
    extra_dirs
        .iter()
        .chain(path_dirs.iter())
        .map(|d| d.join(program))
        .find(|c| is_executable(c))
}

fn is_executable(p: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    std::fs::metadata(p).is_ok_and(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
}
