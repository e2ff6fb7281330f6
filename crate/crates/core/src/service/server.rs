use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{InFlight, RunState, StatusSnapshot};
use crate::runner::{fold_events, LogError, LogState, Results, RunRecord, EVENTS_FILE};
use crate::scoring::{adjudicate, rank, GroundTruth, Ranking};

#[derive(Debug, Clone)]
pub struct ServiceState {
    pub run_dir: PathBuf,
}

/// One consistent prefix of the event log.
#[derive(Debug, Clone)]
pub struct RunSnapshot {
    pub log: LogState,
    pub taken_at: DateTime<Utc>,
}

/// `Ok(None)` while the log is missing or has no complete `run_started` line.
pub fn snapshot(run_dir: &Path) -> Result<Option<RunSnapshot>, LogError> {
    let path = run_dir.join(EVENTS_FILE);
    let text = match std::fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(source) => return Err(LogError::Io { path, source }),
    };
    match fold_events(&text) {
        Ok(log) => Ok(Some(RunSnapshot { log, taken_at: Utc::now() })),
        Err(LogError::MissingRunStart) => Ok(None),
        Err(e) => Err(e),
    }
}

fn process_alive(pid: u32) -> bool {
    // SAFETY: signal 0 only probes for existence.
    let rc = unsafe { libc::kill(pid as libc::pid_t, 0) };
    rc == 0 || std::io::Error::last_os_error().raw_os_error() == Some(libc::EPERM)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsView {
    pub run_id: String,
    pub completed_jobs: usize,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingView {
    pub run_id: String,
    pub completed_jobs: usize,
    pub ranking: Ranking,
}

impl RunSnapshot {
    pub fn state(&self) -> RunState {
        match &self.log.summary {
            Some(s) if s.completed_jobs == s.total_jobs => RunState::Finished,
            Some(_) => RunState::Incomplete,
            None if process_alive(self.log.runner_pid) => RunState::Running,
            None => RunState::Incomplete,
        }
    }

    pub fn status(&self) -> StatusSnapshot {
        let in_flight = self
            .log
            .in_flight
            .iter()
            .map(|(k, started)| {
                let elapsed_s = DateTime::parse_from_rfc3339(started)
                    .map(|t| (self.taken_at - t.with_timezone(&Utc)).num_milliseconds().max(0) as f64 / 1000.0)
                    .unwrap_or(0.0);
                InFlight {
                    problem_id: k.problem_id.clone(),
                    adapter_name: k.adapter_name.clone(),
                    repetition_index: k.repetition_index,
                    elapsed_s,
                }
            })
            .collect();
        StatusSnapshot {
            state: self.state(),
            run_id: Some(self.log.manifest.run_id.clone()),
            total_jobs: self.log.total_jobs,
            completed_jobs: self.log.records.len(),
            in_flight,
        }
    }

    pub fn results(&self) -> ResultsView {
        let r = Results::from_state(&self.log);
        ResultsView { run_id: r.manifest.run_id, completed_jobs: r.records.len(), records: r.records }
    }

    /// Ranking over exactly the records of [`RunSnapshot::results`].
    pub fn ranking(&self) -> Result<RankingView, crate::scoring::ScoringError> {
        let view = self.results();
        let truth = GroundTruth::from_manifest(&self.log.manifest);
        let ranking = rank(&adjudicate(&view.records, &truth, None)?);
        Ok(RankingView { run_id: view.run_id, completed_jobs: view.completed_jobs, ranking })
    }
}

pub fn router(state: ServiceState) -> Router {
    Router::new()
        .route("/status", get(status))
        .route("/results", get(results))
        .route("/ranking", get(ranking))
        .route("/problems", get(problems))
        .route("/adapters", get(adapters))
        .route("/manifest", get(manifest))
        .fallback(not_found)
        .with_state(Arc::new(state))
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, run_dir: PathBuf) -> std::io::Result<()> {
    axum::serve(listener, router(ServiceState { run_dir })).await
}

type Shared = State<Arc<ServiceState>>;

async fn with_snapshot<F>(state: Arc<ServiceState>, f: F) -> Response
where
    F: FnOnce(RunSnapshot) -> Response + Send + 'static,
{
    let dir = state.run_dir.clone();
    let snap = tokio::task::spawn_blocking(move || snapshot(&dir)).await;
    match snap {
        Ok(Ok(Some(s))) => f(s),
        Ok(Ok(None)) => (
            StatusCode::SERVICE_UNAVAILABLE,
            [(header::RETRY_AFTER, "1")],
            Json(json!({"state": RunState::Idle, "error": "run has not started", "retry_after_s": 1})),
        )
            .into_response(),
        Ok(Err(e)) => (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": e.to_string()}))).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": e.to_string()}))).into_response(),
    }
}

async fn status(State(s): Shared) -> Response {
    with_snapshot(s, |snap| Json(snap.status()).into_response()).await
}

async fn results(State(s): Shared) -> Response {
    with_snapshot(s, |snap| Json(snap.results()).into_response()).await
}

async fn ranking(State(s): Shared) -> Response {
    with_snapshot(s, |snap| match snap.ranking() {
        Ok(r) => Json(r).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, Json(json!({"error": e.to_string()}))).into_response(),
    })
    .await
}

async fn problems(State(s): Shared) -> Response {
    with_snapshot(s, |snap| Json(snap.log.manifest.problems).into_response()).await
}

async fn adapters(State(s): Shared) -> Response {
    with_snapshot(s, |snap| Json(snap.log.manifest.adapters).into_response()).await
}

async fn manifest(State(s): Shared) -> Response {
    with_snapshot(s, |snap| Json(snap.log.manifest).into_response()).await
}

async fn not_found() -> Response {
    (StatusCode::NOT_FOUND, Json(json!({"error": "not found"}))).into_response()
}
