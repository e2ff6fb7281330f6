//! Adjudication against ground truth, validation-time classes, the de Bruijn
//! factor, and the ranking.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::{Readability, Verdict};
use crate::corpus::{Corpus, ExpectedStatus};
use crate::runner::{Results, RunManifest, RunRecord};

pub const RANKING_FILE: &str = "ranking.json";

/// Upper bound of the `Good` class, seconds, inclusive.
pub const GOOD_MAX_S: f64 = 1.5;
/// Upper bound of the `Fair` class, seconds, inclusive.
pub const FAIR_MAX_S: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("invalid time measurement {0}")]
    InvalidMeasurement(f64),
    #[error("proof size is zero")]
    ZeroSize,
    #[error("proof text unavailable")]
    Unavailable,
    #[error("record refers to unknown problem {0}")]
    UnknownProblemId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationClass {
    Good,
    Fair,
    Poor,
}

/// Good: t ≤ 1.5 s; Fair: 1.5 s < t ≤ 3 s; Poor: t > 3 s.
pub fn classify_validation_time(t: f64) -> Result<ValidationClass, ScoringError> {
    if t.is_nan() || t < 0.0 {
        return Err(ScoringError::InvalidMeasurement(t));
    }
    Ok(if t <= GOOD_MAX_S {
        ValidationClass::Good
    } else if t <= FAIR_MAX_S {
        ValidationClass::Fair
    } else {
        ValidationClass::Poor
    })
}

/// Byte length after collapsing whitespace runs to one space and trimming.
pub fn normalized_size(text: &str) -> usize {
    let mut n = 0;
    for (i, word) in text.split_whitespace().enumerate() {
        n += word.len() + usize::from(i > 0);
    }
    n
}

/// Informal proof size divided by formal proof size.
pub fn de_bruijn_factor(informal_size: usize, formal_size: usize) -> Result<f64, ScoringError> {
    if informal_size == 0 || formal_size == 0 {
        return Err(ScoringError::ZeroSize);
    }
    Ok(informal_size as f64 / formal_size as f64)
}

pub fn de_bruijn_factor_of_texts(informal: Option<&str>, formal: Option<&str>) -> Result<f64, ScoringError> {
    match (informal, formal) {
        (Some(i), Some(f)) => de_bruijn_factor(normalized_size(i), normalized_size(f)),
        _ => Err(ScoringError::Unavailable),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correctness {
    CorrectSolve,
    IncorrectClaim,
    NoSolve,
    NovelClaim,
}

pub fn correctness(verdict: Verdict, expected: ExpectedStatus) -> Correctness {
    use ExpectedStatus as E;
    match (verdict, expected) {
        (Verdict::Proved, E::Proved) | (Verdict::Disproved, E::Disproved) => Correctness::CorrectSolve,
        (Verdict::Proved, E::Disproved) | (Verdict::Disproved, E::Proved) => Correctness::IncorrectClaim,
        (Verdict::Proved | Verdict::Disproved, E::Open) => Correctness::NovelClaim,
        _ => Correctness::NoSolve,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicatedResult {
    #[serde(flatten)]
    pub record: RunRecord,
    pub expected_status: ExpectedStatus,
    pub correctness: Correctness,
    pub validation_class: Option<ValidationClass>,
    pub db_factor: Option<f64>,
    pub readable_proofs: Readability,
}

/// Expected status and informal proof per problem, plus prover metadata.
#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    problems: HashMap<String, (ExpectedStatus, Option<String>)>,
    readability: HashMap<String, Readability>,
}

impl GroundTruth {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let problems = corpus
            .entries()
            .iter()
            .map(|e| (e.id().to_string(), (e.meta.expected_status, e.meta.informal_proof.clone())))
            .collect();
        GroundTruth { problems, readability: HashMap::new() }
    }

    /// Uses the statuses echoed in a run manifest (no informal proofs).
    pub fn from_manifest(manifest: &RunManifest) -> Self {
        let problems = manifest.problems.iter().map(|p| (p.id.clone(), (p.expected_status, None))).collect();
        GroundTruth { problems, readability: HashMap::new() }.with_adapters(manifest)
    }

    pub fn with_adapters(mut self, manifest: &RunManifest) -> Self {
        self.readability = manifest.adapters.iter().map(|a| (a.name.clone(), a.readable_proofs)).collect();
        self
    }

    pub fn insert(&mut self, id: &str, expected: ExpectedStatus, informal_proof: Option<String>) {
        self.problems.insert(id.to_string(), (expected, informal_proof));
    }

    pub fn set_readability(&mut self, adapter: &str, r: Readability) {
        self.readability.insert(adapter.to_string(), r);
    }
}

/// Adjudicates records. Repetitions of one job collapse to the repetition
/// with the smallest wall time, carrying the smallest CPU time.
///
/// `run_dir` is used to read proof artifacts for the de Bruijn factor.
pub fn adjudicate(
    records: &[RunRecord],
    truth: &GroundTruth,
    run_dir: Option<&Path>,
) -> Result<Vec<AdjudicatedResult>, ScoringError> {
    let mut jobs: BTreeMap<(&str, &str), RunRecord> = BTreeMap::new();
    for r in records {
        if !truth.problems.contains_key(&r.problem_id) {
            return Err(ScoringError::UnknownProblemId(r.problem_id.clone()));
        }
        let slot = jobs.entry((&r.problem_id, &r.adapter_name));
        slot.and_modify(|best| {
            let cpu = best.cpu_time_s.min(r.cpu_time_s);
            let faster = r.wall_time_s < best.wall_time_s
                || (r.wall_time_s == best.wall_time_s && r.repetition_index < best.repetition_index);
            if faster {
                *best = r.clone();
            }
            best.cpu_time_s = cpu;
        })
        .or_insert_with(|| r.clone());
    }

    let mut out = Vec::with_capacity(jobs.len());
    for record in jobs.into_values() {
        let (expected, informal) = &truth.problems[&record.problem_id];
        let correctness = correctness(record.verdict, *expected);
        let validation_class = match correctness {
            Correctness::CorrectSolve => Some(classify_validation_time(record.wall_time_s)?),
            _ => None,
        };
        let formal = match (run_dir, &record.proof_artifact_path) {
            (Some(dir), Some(p)) => std::fs::read_to_string(dir.join(p)).ok(),
            _ => None,
        };
        let db_factor = if correctness == Correctness::CorrectSolve {
            de_bruijn_factor_of_texts(informal.as_deref(), formal.as_deref()).ok()
        } else {
            None
        };
        let readable_proofs = truth.readability.get(&record.adapter_name).copied().unwrap_or(Readability::NotAvailable);
        out.push(AdjudicatedResult { record, expected_status: *expected, correctness, validation_class, db_factor, readable_proofs });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub good: usize,
    pub fair: usize,
    pub poor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub rank: usize,
    pub adapter_name: String,
    pub tier: u8,
    pub solved: usize,
    pub incorrect: usize,
    pub novel: usize,
    pub total_time_s: f64,
    pub class_counts: ClassCounts,
    pub readable_proofs: Readability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub entries: Vec<RankingEntry>,
}

impl Ranking {
    pub fn order(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.adapter_name.as_str()).collect()
    }

    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("ranking serializes");
        s.push('\n');
        s
    }
}

/// Tier 0 holds adapters without incorrect claims. Within a tier: more
/// solves first, then less total wall time on solved problems, then name.
pub fn rank(results: &[AdjudicatedResult]) -> Ranking {
    let mut sorted: Vec<&AdjudicatedResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.record.adapter_name, &a.record.problem_id, a.record.repetition_index)
            .cmp(&(&b.record.adapter_name, &b.record.problem_id, b.record.repetition_index))
    });
    let mut by_adapter: BTreeMap<&str, RankingEntry> = BTreeMap::new();
    for r in sorted {
        let e = by_adapter.entry(&r.record.adapter_name).or_insert_with(|| RankingEntry {
            rank: 0,
            adapter_name: r.record.adapter_name.clone(),
            tier: 0,
            solved: 0,
            incorrect: 0,
            novel: 0,
            total_time_s: 0.0,
            class_counts: ClassCounts::default(),
            readable_proofs: r.readable_proofs,
        });
        match r.correctness {
            Correctness::CorrectSolve => {
                e.solved += 1;
                e.total_time_s += r.record.wall_time_s;
                match r.validation_class {
                    Some(ValidationClass::Good) => e.class_counts.good += 1,
                    Some(ValidationClass::Fair) => e.class_counts.fair += 1,
                    Some(ValidationClass::Poor) => e.class_counts.poor += 1,
                    None => {}
                }
            }
            Correctness::IncorrectClaim => e.incorrect += 1,
            Correctness::NovelClaim => e.novel += 1,
            Correctness::NoSolve => {}
        }
    }
    let mut entries: Vec<RankingEntry> = by_adapter
        .into_values()
        .map(|mut e| {
            e.tier = u8::from(e.incorrect > 0);
            e.total_time_s = (e.total_time_s * 1e6).round() / 1e6;
            e
        })
        .collect();
    entries.sort_by(compare_entries);
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ranking { entries }
}

pub fn compare_entries(a: &RankingEntry, b: &RankingEntry) -> std::cmp::Ordering {
    a.tier
        .cmp(&b.tier)
        .then(b.solved.cmp(&a.solved))
        .then(a.total_time_s.total_cmp(&b.total_time_s))
        .then(a.adapter_name.cmp(&b.adapter_name))
}

/// Adjudicates and ranks a results file. Ground truth comes from `corpus`
/// when given, else from the statuses echoed in the run manifest.
pub fn score_results(
    results: &Results,
    corpus: Option<&Corpus>,
    run_dir: Option<&Path>,
) -> Result<(Vec<AdjudicatedResult>, Ranking), ScoringError> {
    let truth = match corpus {
        Some(c) => GroundTruth::from_corpus(c).with_adapters(&results.manifest),
        None => GroundTruth::from_manifest(&results.manifest),
    };
    let adjudicated = adjudicate(&results.records, &truth, run_dir)?;
    let ranking = rank(&adjudicated);
    Ok((adjudicated, ranking))
}
