use std::io::Write;
use std::time::Duration;

use thiserror::Error;

use super::{RunState, StatusSnapshot};

#[derive(Debug, Error)]
pub enum WatchError {
    #[error("lost connection to {url} after {attempts} attempts: {last}")]
    ConnectionLost { url: String, attempts: u32, last: String },
    #[error("malformed status response: {0}")]
    Schema(String),
    #[error("unexpected HTTP status {0}")]
    Http(u16),
    #[error("cannot write status line: {0}")]
    Output(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WatchOutcome {
    Finished,
    Incomplete,
}

#[derive(Debug, Clone)]
pub struct WatchOptions {
    pub interval: Duration,
    /// Consecutive failed connection attempts tolerated.
    pub retry_budget: u32,
}

impl Default for WatchOptions {
    fn default() -> Self {
        WatchOptions { interval: Duration::from_secs(2), retry_budget: 5 }
    }
}

pub fn status_line(s: &StatusSnapshot) -> String {
    let state = match s.state {
        RunState::Idle => "idle",
        RunState::Running => "running",
        RunState::Finished => "finished",
        RunState::Incomplete => "incomplete",
    };
    let id = s.run_id.as_deref().map(|r| &r[..r.len().min(8)]).unwrap_or("-");
    let mut line = format!("run {id} {state}: {}/{} jobs done", s.completed_jobs, s.total_jobs);
    if !s.in_flight.is_empty() {
        let jobs: Vec<String> = s
            .in_flight
            .iter()
            .map(|j| format!("{}/{} {:.1}s", j.problem_id, j.adapter_name, j.elapsed_s))
            .collect();
        line.push_str(&format!(", running: {}", jobs.join(", ")));
    }
    line
}

/// Polls `<base>/status` until the run finishes, printing one line per poll.
pub async fn watch(base_url: &str, opts: &WatchOptions, out: &mut (dyn Write + Send)) -> Result<WatchOutcome, WatchError> {
    let url = format!("{}/status", base_url.trim_end_matches('/'));
    let client = reqwest::Client::builder()
        .timeout(Duration::from_secs(10))
        .build()
        .map_err(|e| WatchError::Schema(e.to_string()))?;
    let mut failures = 0u32;
    loop {
        match client.get(&url).send().await {
            Err(e) => {
                failures += 1;
                if failures > opts.retry_budget {
                    return Err(WatchError::ConnectionLost { url, attempts: failures, last: e.to_string() });
                }
                tracing::debug!(attempt = failures, "status poll failed: {e}");
            }
            Ok(resp) if resp.status() == reqwest::StatusCode::SERVICE_UNAVAILABLE => {
                failures = 0;
                writeln!(out, "waiting for the run to start")?;
            }
            Ok(resp) if !resp.status().is_success() => return Err(WatchError::Http(resp.status().as_u16())),
            Ok(resp) => {
                failures = 0;
                let body = resp.text().await.map_err(|e| WatchError::Schema(e.to_string()))?;
                let s: StatusSnapshot = serde_json::from_str(&body).map_err(|e| WatchError::Schema(e.to_string()))?;
                if !s.is_consistent() {
                    return Err(WatchError::Schema(format!("inconsistent snapshot: {body}")));
                }
                writeln!(out, "{}", status_line(&s))?;
                out.flush()?;
                match s.state {
                    RunState::Finished => return Ok(WatchOutcome::Finished),
                    RunState::Incomplete => return Ok(WatchOutcome::Incomplete),
                    _ => {}
                }
            }
        }
        tokio::time::sleep(opts.interval).await;
    }
}
