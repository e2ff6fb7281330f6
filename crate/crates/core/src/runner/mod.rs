//! Executes the problem × adapter matrix and records every outcome.

mod events;
mod host;
mod measure;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adapters::{classify_output, resolve_program, AdapterSpec, Readability, Verdict};
use crate::corpus::{AxiomSystem, ConjectureType, Corpus, ExpectedStatus, ProblemEntry};
use crate::geoform::Dialect;

pub use events::{
    fold_events, read_log, replay_log, Event, EventLog, JobKey, LogError, LogState, Results, RunSummary,
    EVENTS_FILE, RESULTS_FILE,
};
pub use host::{capture_host, HostInfo};
pub use measure::{live_group_members, measure_job, Breach, Limits, MeasureError, Measurement, OUTPUT_CAP};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("output directory {path} is not writable: {source}")]
    OutDirNotWritable { path: PathBuf, source: std::io::Error },
    #[error("output directory {0} already holds a run")]
    OutDirInUse(PathBuf),
    #[error("no runnable adapters (skipped: {0:?})")]
    NoRunnableAdapters(Vec<String>),
    #[error("event log write failed: {0}")]
    Log(#[from] std::io::Error),
    #[error(transparent)]
    Replay(#[from] LogError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingMode {
    Parallel,
    Serial,
}

impl std::str::FromStr for TimingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel" => Ok(TimingMode::Parallel),
            "serial" => Ok(TimingMode::Serial),
            _ => Err(format!("unknown timing mode `{s}` (expected serial or parallel)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub wall_limit_s: f64,
    pub cpu_limit_s: f64,
    pub mem_limit_mib: u64,
    pub workers: usize,
    pub timing_mode: TimingMode,
    pub repetitions: u32,
    pub grace_kill_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            wall_limit_s: 10.0,
            cpu_limit_s: 10.0,
            mem_limit_mib: 1024,
            workers: 4,
            timing_mode: TimingMode::Serial,
            repetitions: 1,
            grace_kill_s: 0.5,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: &str| Err(RunError::InvalidConfig(m.to_string()));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.wall_limit_s) || !positive(self.cpu_limit_s) {
            return bad("wall and cpu limits must be positive");
        }
        if self.mem_limit_mib == 0 || self.workers == 0 {
            return bad("memory limit and workers must be positive");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if !(self.grace_kill_s.is_finite() && self.grace_kill_s >= 0.0 && self.grace_kill_s < self.wall_limit_s) {
            return bad("grace_kill_s must be in [0, wall_limit_s)");
        }
        Ok(())
    }

    pub fn limits(&self) -> Limits {
        Limits {
            wall: Duration::from_secs_f64(self.wall_limit_s),
            cpu: Duration::from_secs_f64(self.cpu_limit_s),
            mem_mib: self.mem_limit_mib,
            grace: Duration::from_secs_f64(self.grace_kill_s),
        }
    }

    /// Workers actually used; serial timing never overlaps jobs.
    pub fn effective_workers(&self) -> usize {
        match self.timing_mode {
            TimingMode::Serial => 1,
            TimingMode::Parallel => self.workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem_id: String,
    pub adapter_name: String,
    pub repetition_index: u32,
    pub verdict: Verdict,
    pub wall_time_s: f64,
    pub cpu_time_s: f64,
    pub max_rss_mib: f64,
    pub exit_code: Option<i32>,
    pub stdout_excerpt: String,
    pub stderr_excerpt: String,
    pub proof_artifact_path: Option<String>,
    pub diagnostic: Option<String>,
}

impl RunRecord {
    pub fn key(&self) -> JobKey {
        JobKey {
            problem_id: self.problem_id.clone(),
            adapter_name: self.adapter_name.clone(),
            repetition_index: self.repetition_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub id: String,
    pub axiom_system: AxiomSystem,
    pub conjecture_type: ConjectureType,
    pub expected_status: ExpectedStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterStatus {
    Present,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterInfo {
    pub name: String,
    pub method: String,
    pub input_dialect: Dialect,
    pub readable_proofs: Readability,
    pub status: AdapterStatus,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRef {
    pub name: String,
    pub version: String,
    pub manifest: String,
}

/// Reproducibility record, written before the first job starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub started_at: String,
    pub host: HostInfo,
    pub config_hash: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub corpus: CorpusRef,
    pub problems: Vec<ProblemInfo>,
    pub adapters: Vec<AdapterInfo>,
}

/// SHA-256 over the canonical JSON of the configuration, the corpus
/// manifest, the selected ids and the adapter specs.
pub fn config_hash(config: &RunConfig, corpus: &Corpus, selection: &[&ProblemEntry], adapters: &[AdapterSpec]) -> String {
    #[derive(Serialize)]
    struct Hashed<'a> {
        config: &'a RunConfig,
        corpus: &'a crate::corpus::CorpusManifest,
        selection: Vec<&'a str>,
        adapters: &'a [AdapterSpec],
    }
    let doc = Hashed {
        config,
        corpus: &corpus.manifest,
        selection: selection.iter().map(|e| e.id()).collect(),
        adapters,
    };
    let bytes = serde_json::to_vec(&doc).expect("hash input serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep per-job scratch directories under `<out>/work`.
    pub keep_workdirs: bool,
    /// Searched before `PATH` for bare program names.
    pub search_dirs: Vec<PathBuf>,
}

impl RunOptions {
    /// Default search directory: the one holding the running executable,
    /// so sibling binaries such as `mockprover` are found.
    pub fn with_exe_dir(mut self) -> Self {
        if let Some(dir) = std::env::current_exe().ok().and_then(|p| p.parent().map(Path::to_path_buf)) {
            self.search_dirs.push(dir);
        }
        self
    }
}

struct Runnable<'a> {
    spec: &'a AdapterSpec,
    program: PathBuf,
}

struct Job<'a> {
    entry: &'a ProblemEntry,
    adapter: &'a Runnable<'a>,
    rep: u32,
}

pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Runs every (problem, present adapter, repetition) job and writes
/// `manifest.json`, `events.jsonl` and `results.json` into `out_dir`.
pub fn run_competition(
    corpus: &Corpus,
    selection: &[&ProblemEntry],
    adapters: &[AdapterSpec],
    config: &RunConfig,
    out_dir: &Path,
    options: &RunOptions,
) -> Result<Results, RunError> {
    config.validate()?;
    let not_writable = |source| RunError::OutDirNotWritable { path: out_dir.to_path_buf(), source };
    std::fs::create_dir_all(out_dir).map_err(not_writable)?;
    let out_dir = out_dir.canonicalize().map_err(not_writable)?;
    let events_path = out_dir.join(EVENTS_FILE);
    if events_path.exists() {
        return Err(RunError::OutDirInUse(out_dir));
    }

    let mut runnable = Vec::new();
    let mut infos = Vec::new();
    let mut skipped = Vec::new();
    for spec in adapters {
        let program = resolve_program(&spec.command_template[0], &options.search_dirs);
        let (status, note) = match &program {
            Some(_) => (AdapterStatus::Present, None),
            None => (AdapterStatus::Skipped, Some(format!("executable `{}` not found", spec.command_template[0]))),
        };
        infos.push(AdapterInfo {
            name: spec.name.clone(),
            method: spec.method.clone(),
            input_dialect: spec.input_dialect,
            readable_proofs: spec.readable_proofs,
            status,
            note,
        });
        match program {
            Some(program) => runnable.push(Runnable { spec, program }),
            None => {
                tracing::warn!(adapter = %spec.name, "skipped: executable not found");
                skipped.push(spec.name.clone());
            }
        }
    }
    if runnable.is_empty() {
        return Err(RunError::NoRunnableAdapters(skipped));
    }

    let log = EventLog::create(&events_path).map_err(not_writable)?;
    let manifest = RunManifest {
        run_id: uuid::Uuid::new_v4().to_string(),
        started_at: now_rfc3339(),
        host: capture_host(),
        config_hash: config_hash(config, corpus, selection, adapters),
        tool_version: crate::TOOL_VERSION.to_string(),
        config: config.clone(),
        corpus: CorpusRef {
            name: corpus.manifest.name.clone(),
            version: corpus.manifest.version.clone(),
            manifest: corpus.manifest_path.display().to_string(),
        },
        problems: selection
            .iter()
            .map(|e| ProblemInfo {
                id: e.id().to_string(),
                axiom_system: e.meta.axiom_system,
                conjecture_type: e.meta.conjecture_type,
                expected_status: e.meta.expected_status,
            })
            .collect(),
        adapters: infos,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(out_dir.join(MANIFEST_FILE), manifest_json)?;

    let mut jobs = Vec::new();
    for entry in selection {
        for adapter in &runnable {
            for rep in 0..config.repetitions {
                jobs.push(Job { entry, adapter, rep });
            }
        }
    }
    let total_jobs = jobs.len();
    log.append(&Event::RunStarted { manifest, total_jobs, runner_pid: std::process::id() })?;

    let started = Instant::now();
    let corpus_manifest = corpus.manifest_path.canonicalize().unwrap_or_else(|_| corpus.manifest_path.clone());
    let ctx = JobContext { out_dir: &out_dir, config, options, corpus_manifest: &corpus_manifest, log: &log };
    let (tx, rx) = crossbeam::channel::unbounded();
    for job in jobs {
        tx.send(job).expect("queue open");
    }
    drop(tx);
    let failures = std::thread::scope(|s| {
        let handles: Vec<_> = (0..config.effective_workers())
            .map(|_| {
                let rx = rx.clone();
                let ctx = &ctx;
                s.spawn(move || -> std::io::Result<()> {
                    for job in rx.iter() {
                        ctx.execute(&job)?;
                    }
                    Ok(())
                })
            })
            .collect();
        handles.into_iter().filter_map(|h| h.join().expect("worker panicked").err()).collect::<Vec<_>>()
    });
    if let Some(e) = failures.into_iter().next() {
        return Err(RunError::Log(e));
    }

    log.append(&Event::RunFinished {
        summary: RunSummary {
            total_jobs,
            completed_jobs: total_jobs,
            skipped_adapters: skipped,
            wall_time_s: started.elapsed().as_secs_f64(),
        },
    })?;
    if !options.keep_workdirs {
        // only succeeds once every job directory is gone
        let _ = std::fs::remove_dir(out_dir.join("work"));
    }
    let results = replay_log(&events_path)?;
    std::fs::write(out_dir.join(RESULTS_FILE), results.to_canonical_json())?;
    Ok(results)
}

struct JobContext<'a> {
    out_dir: &'a Path,
    config: &'a RunConfig,
    options: &'a RunOptions,
    corpus_manifest: &'a Path,
    log: &'a EventLog,
}

fn round_us(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl JobContext<'_> {
    fn execute(&self, job: &Job<'_>) -> std::io::Result<()> {
        let spec = job.adapter.spec;
        let pid = job.entry.id();
        self.log.append(&Event::JobStarted {
            problem_id: pid.to_string(),
            adapter_name: spec.name.clone(),
            repetition_index: job.rep,
            started_at: now_rfc3339(),
        })?;

        let workdir = self.out_dir.join("work").join(format!("{pid}-{}-r{}", spec.name, job.rep));
        let record = match self.prepare(job, &workdir) {
            Ok(argv) => self.measure(job, &workdir, argv),
            Err(e) => self.error_record(job, format!("cannot prepare job directory: {e}")),
        };
        if !self.options.keep_workdirs {
            let _ = std::fs::remove_dir_all(&workdir);
        }
        tracing::debug!(problem = pid, adapter = %spec.name, verdict = %record.verdict, wall = record.wall_time_s, "job finished");
        self.log.append(&Event::JobFinished { record })
    }

    fn prepare(&self, job: &Job<'_>, workdir: &Path) -> std::io::Result<Vec<String>> {
        let spec = job.adapter.spec;
        if workdir.exists() {
            std::fs::remove_dir_all(workdir)?;
        }
        std::fs::create_dir_all(workdir)?;
        let input = spec.input_file_name(job.entry.id());
        std::fs::write(workdir.join(&input), spec.input_dialect.emit(&job.entry.problem))?;
        let mut argv = spec.render_command(&input, workdir);
        argv[0] = job.adapter.program.display().to_string();
        Ok(argv)
    }

    fn measure(&self, job: &Job<'_>, workdir: &Path, argv: Vec<String>) -> RunRecord {
        let env = [
            ("GASC_PROBLEM_ID".to_string(), job.entry.id().to_string()),
            ("GASC_CORPUS".to_string(), self.corpus_manifest.display().to_string()),
            ("GASC_WORKDIR".to_string(), workdir.display().to_string()),
        ];
        let m = match measure_job(&argv, Some(workdir), &env, &self.config.limits()) {
            Ok(m) => m,
            Err(e) => return self.error_record(job, e.to_string()),
        };
        let spec = job.adapter.spec;
        let verdict = match m.breach {
            Some(Breach::Wall | Breach::Cpu) => Verdict::Timeout,
            Some(Breach::Memory) => Verdict::MemOut,
            None => classify_output(spec, &format!("{}\n{}", m.stdout, m.stderr), m.exit_code),
        };
        let proof_artifact_path = spec.proof_artifact.as_deref().and_then(|pattern| self.collect_proof(job, workdir, pattern));
        RunRecord {
            problem_id: job.entry.id().to_string(),
            adapter_name: spec.name.clone(),
            repetition_index: job.rep,
            verdict,
            wall_time_s: round_us(m.wall_time_s),
            cpu_time_s: round_us(m.cpu_time_s),
            max_rss_mib: round_us(m.max_rss_mib),
            exit_code: m.exit_code,
            stdout_excerpt: m.stdout,
            stderr_excerpt: m.stderr,
            proof_artifact_path,
            diagnostic: m.breach.map(|b| format!("limit exceeded: {b:?}").to_lowercase()),
        }
    }

    fn collect_proof(&self, job: &Job<'_>, workdir: &Path, pattern: &str) -> Option<String> {
        let full = workdir.join(pattern);
        let found = glob::glob(&full.to_string_lossy()).ok()?.flatten().find(|p| p.is_file())?;
        let ext = found.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
        let rel = PathBuf::from("proofs")
            .join(&job.adapter.spec.name)
            .join(format!("{}-r{}{ext}", job.entry.id(), job.rep));
        let dest = self.out_dir.join(&rel);
        std::fs::create_dir_all(dest.parent()?).ok()?;
        std::fs::copy(&found, &dest).ok()?;
        Some(rel.to_string_lossy().into_owned())
    }

    fn error_record(&self, job: &Job<'_>, diagnostic: String) -> RunRecord {
        RunRecord {
            problem_id: job.entry.id().to_string(),
            adapter_name: job.adapter.spec.name.clone(),
            repetition_index: job.rep,
            verdict: Verdict::Error,
            wall_time_s: 0.0,
            cpu_time_s: 0.0,
            max_rss_mib: 0.0,
            exit_code: None,
            stdout_excerpt: String::new(),
            stderr_excerpt: String::new(),
            proof_artifact_path: None,
            diagnostic: Some(diagnostic),
        }
    }
}
