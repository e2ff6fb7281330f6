//! Read-only HTTP view of a run directory, and the polling client.
//!
//! Every request folds the complete lines of `events.jsonl` as they are at
//! that instant; the service never writes to the run directory.

mod server;
mod watch;

use serde::{Deserialize, Serialize};

pub use server::{router, serve, snapshot, RankingView, ResultsView, RunSnapshot, ServiceState};
pub use watch::{status_line, watch, WatchError, WatchOptions, WatchOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Idle,
    Running,
    Finished,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InFlight {
    pub problem_id: String,
    pub adapter_name: String,
    pub repetition_index: u32,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusSnapshot {
    pub state: RunState,
    pub run_id: Option<String>,
    pub total_jobs: usize,
    pub completed_jobs: usize,
    pub in_flight: Vec<InFlight>,
}

impl StatusSnapshot {
    /// Checks the snapshot invariants.
    pub fn is_consistent(&self) -> bool {
        self.completed_jobs <= self.total_jobs
            && (self.state != RunState::Finished || self.completed_jobs == self.total_jobs)
    }
}
