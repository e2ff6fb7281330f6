//! Append-only event log (`events.jsonl`) and its fold into results.
//!
//! Every line is one JSON object tagged by `event`. A line is only
//! considered once its terminating newline is present, so a reader racing
//! the writer always sees a consistent prefix.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{RunManifest, RunRecord};

pub const EVENTS_FILE: &str = "events.jsonl";
pub const RESULTS_FILE: &str = "results.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    RunStarted {
        manifest: RunManifest,
        total_jobs: usize,
        runner_pid: u32,
    },
    JobStarted {
        problem_id: String,
        adapter_name: String,
        repetition_index: u32,
        started_at: String,
    },
    JobFinished {
        record: RunRecord,
    },
    RunFinished {
        summary: RunSummary,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub total_jobs: usize,
    pub completed_jobs: usize,
    pub skipped_adapters: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("cannot read event log {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("event log has no run_started event")]
    MissingRunStart,
    #[error("event log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

/// Serialized single writer.
pub struct EventLog {
    file: Mutex<File>,
}

impl EventLog {
    /// Creates a fresh log; fails if one already exists.
    pub fn create(path: &Path) -> std::io::Result<EventLog> {
        let file = OpenOptions::new().create_new(true).append(true).open(path)?;
        Ok(EventLog { file: Mutex::new(file) })
    }

    /// Writes one whole line per call.
    pub fn append(&self, event: &Event) -> std::io::Result<()> {
        let mut line = serde_json::to_string(event).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        f.write_all(line.as_bytes())?;
        f.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct JobKey {
    pub problem_id: String,
    pub adapter_name: String,
    pub repetition_index: u32,
}

/// Everything the log says so far.
#[derive(Debug, Clone)]
pub struct LogState {
    pub manifest: RunManifest,
    pub total_jobs: usize,
    pub runner_pid: u32,
    /// Started but not yet finished, with their start timestamps.
    pub in_flight: BTreeMap<JobKey, String>,
    /// Finished records in log order.
    pub records: Vec<RunRecord>,
    pub summary: Option<RunSummary>,
}

/// Folds the complete lines of `text`. A trailing line without newline is
/// ignored.
pub fn fold_events(text: &str) -> Result<LogState, LogError> {
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut state: Option<LogState> = None;
    for (i, line) in complete.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event: Event = serde_json::from_str(line)
            .map_err(|e| LogError::Corrupt { line: i + 1, message: e.to_string() })?;
        let corrupt = |m: &str| LogError::Corrupt { line: i + 1, message: m.to_string() };
        match (event, state.as_mut()) {
            (Event::RunStarted { manifest, total_jobs, runner_pid }, None) => {
                state = Some(LogState {
                    manifest,
                    total_jobs,
                    runner_pid,
                    in_flight: BTreeMap::new(),
                    records: Vec::new(),
                    summary: None,
                });
            }
            (Event::RunStarted { .. }, Some(_)) => return Err(corrupt("second run_started event")),
            (_, None) => return Err(LogError::MissingRunStart),
            (Event::JobStarted { problem_id, adapter_name, repetition_index, started_at }, Some(s)) => {
                s.in_flight.insert(JobKey { problem_id, adapter_name, repetition_index }, started_at);
            }
            (Event::JobFinished { record }, Some(s)) => {
                s.in_flight.remove(&record.key());
                s.records.push(record);
            }
            (Event::RunFinished { summary }, Some(s)) => s.summary = Some(summary),
        }
    }
    state.ok_or(LogError::MissingRunStart)
}

/// Canonical `results.json` content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub manifest: RunManifest,
    /// The log ended before `run_finished`.
    pub incomplete: bool,
    /// Sorted by (problem_id, adapter_name, repetition_index).
    pub records: Vec<RunRecord>,
}

impl Results {
    pub fn from_state(state: &LogState) -> Results {
        let mut records = state.records.clone();
        records.sort_by_key(|r| r.key());
        Results { manifest: state.manifest.clone(), incomplete: state.summary.is_none(), records }
    }

    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }

    /// Reads `results.json` from a run directory or a direct file path.
    pub fn load(path: &Path) -> Result<Results, LogError> {
        let file = if path.is_dir() { path.join(RESULTS_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&file).map_err(|source| LogError::Io { path: file.clone(), source })?;
        serde_json::from_str(&text).map_err(|e| LogError::Corrupt { line: e.line(), message: e.to_string() })
    }
}

pub fn read_log(path: &Path) -> Result<LogState, LogError> {
    let text = std::fs::read_to_string(path).map_err(|source| LogError::Io { path: path.to_path_buf(), source })?;
    fold_events(&text)
}

/// Rebuilds results from an event log.
pub fn replay_log(path: &Path) -> Result<Results, LogError> {
    read_log(path).map(|s| Results::from_state(&s))
}
