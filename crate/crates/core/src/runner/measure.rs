//! Process-tree execution under wall, CPU and memory limits.
//!
//! The child is started as the leader of a new process group. While it runs,
//! `/proc` is sampled for every member of that group to enforce the CPU and
//! memory limits; on a breach the group receives SIGTERM, then SIGKILL once
//! `grace` has elapsed. When the leader exits, anything left in the group is
//! killed. The calling process registers as a child subreaper so that
//! orphaned descendants are re-parented to it and can be reaped, with their
//! resource usage, by process group.

use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Once;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use std::os::unix::process::CommandExt;

use thiserror::Error;

/// Bytes kept per output stream.
pub const OUTPUT_CAP: usize = 64 * 1024;

const POLL: Duration = Duration::from_millis(5);
const SAMPLE_EVERY: u32 = 4;
const REAP_DEADLINE: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub wall: Duration,
    pub cpu: Duration,
    pub mem_mib: u64,
    pub grace: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Breach {
    Wall,
    Cpu,
    Memory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    /// Limit that made the runner stop the job, if any.
    pub breach: Option<Breach>,
    pub wall_time_s: f64,
    /// User + system time of the whole process tree.
    pub cpu_time_s: f64,
    pub max_rss_mib: f64,
    /// Exit status; `128 + signal` when the leader died from a signal.
    pub exit_code: Option<i32>,
    pub signal: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub stdout_truncated: bool,
    pub stderr_truncated: bool,
}

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("empty command line")]
    EmptyCommand,
    #[error("cannot spawn `{program}`: {source}")]
    Spawn { program: String, source: std::io::Error },
}

static SUBREAPER: Once = Once::new();

fn become_subreaper() {
    SUBREAPER.call_once(|| {
        // SAFETY: plain prctl call with integer arguments.
        unsafe {
            libc::prctl(libc::PR_SET_CHILD_SUBREAPER, 1 as libc::c_ulong, 0, 0, 0);
        }
    });
}

pub fn measure_job(
    argv: &[String],
    cwd: Option<&Path>,
    env: &[(String, String)],
    limits: &Limits,
) -> Result<Measurement, MeasureError> {
    let (program, args) = argv.split_first().ok_or(MeasureError::EmptyCommand)?;
    become_subreaper();

    let mut cmd = Command::new(program);
    cmd.args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }

    let start = Instant::now();
    let mut child = cmd
        .spawn()
        .map_err(|source| MeasureError::Spawn { program: program.clone(), source })?;
    let pid = child.id() as libc::pid_t;
    let out_reader = spawn_reader(child.stdout.take());
    let err_reader = spawn_reader(child.stderr.take());
    // `child` is reaped below through wait4; dropping it does not wait.
    drop(child);

    let mut sampler = TreeSampler::new(pid);
    let mut breach = None;
    let mut term_sent: Option<Instant> = None;
    let mut killed = false;
    let mut tick = 0u32;
    let cpu_limit = limits.cpu.as_secs_f64();
    let mem_limit = limits.mem_mib as f64;

    loop {
        if leader_exited(pid) {
            break;
        }
        if tick.is_multiple_of(SAMPLE_EVERY) {
            sampler.sample();
        }
        tick = tick.wrapping_add(1);
        match term_sent {
            None => {
                breach = if start.elapsed() >= limits.wall {
                    Some(Breach::Wall)
                } else if sampler.peak_cpu_s > cpu_limit {
                    Some(Breach::Cpu)
                } else if sampler.peak_rss_mib > mem_limit {
                    Some(Breach::Memory)
                } else {
                    None
                };
                if breach.is_some() {
                    signal_group(pid, libc::SIGTERM);
                    term_sent = Some(Instant::now());
                }
            }
            Some(t) if !killed && t.elapsed() >= limits.grace => {
                signal_group(pid, libc::SIGKILL);
                killed = true;
            }
            Some(_) => {}
        }
        std::thread::sleep(POLL);
    }
    let wall = start.elapsed();

    // The exited leader still holds the group id; clear out the rest.
    signal_group(pid, libc::SIGKILL);
    let (status, usage) = reap(pid, 0).expect("leader was observed exiting");
    let mut cpu_s = rusage_cpu_s(&usage);
    let mut max_rss_kib = usage.ru_maxrss.max(0) as f64;

    let deadline = Instant::now() + REAP_DEADLINE;
    loop {
        match reap(-pid, libc::WNOHANG) {
            Some((_, ru)) => {
                cpu_s += rusage_cpu_s(&ru);
                max_rss_kib = max_rss_kib.max(ru.ru_maxrss.max(0) as f64);
            }
            None if Instant::now() < deadline && group_has_children(pid) => {
                std::thread::sleep(Duration::from_millis(1));
            }
            None => break,
        }
    }

    let (stdout, stdout_truncated) = out_reader.join().unwrap_or_default();
    let (stderr, stderr_truncated) = err_reader.join().unwrap_or_default();

    let (exit_code, signal) = if libc::WIFEXITED(status) {
        (Some(libc::WEXITSTATUS(status)), None)
    } else if libc::WIFSIGNALED(status) {
        let sig = libc::WTERMSIG(status);
        (Some(128 + sig), Some(sig))
    } else {
        (None, None)
    };

    Ok(Measurement {
        breach,
        wall_time_s: wall.as_secs_f64(),
        cpu_time_s: cpu_s.max(sampler.peak_cpu_s),
        max_rss_mib: (max_rss_kib / 1024.0).max(sampler.peak_rss_mib),
        exit_code: if breach.is_some() { None } else { exit_code },
        signal,
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
        stdout_truncated,
        stderr_truncated,
    })
}

fn spawn_reader<R: Read + Send + 'static>(stream: Option<R>) -> JoinHandle<(Vec<u8>, bool)> {
    std::thread::spawn(move || {
        let mut kept = Vec::new();
        let mut truncated = false;
        let Some(mut stream) = stream else {
            return (kept, truncated);
        };
        let mut buf = [0u8; 8192];
        loop {
            match stream.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    let room = OUTPUT_CAP - kept.len();
                    if n > room {
                        truncated = true;
                    }
                    kept.extend_from_slice(&buf[..n.min(room)]);
                }
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(_) => break,
            }
        }
        (kept, truncated)
    })
}

fn signal_group(pgid: libc::pid_t, sig: libc::c_int) {
    // SAFETY: killpg has no memory-safety preconditions; ESRCH is ignored.
    unsafe {
        libc::killpg(pgid, sig);
    }
}

/// True once the leader is a zombie; it is not reaped here.
fn leader_exited(pid: libc::pid_t) -> bool {
    // SAFETY: siginfo_t is plain data; waitid writes it.
    unsafe {
        let mut info: libc::siginfo_t = std::mem::zeroed();
        let rc = libc::waitid(
            libc::P_PID,
            pid as libc::id_t,
            &mut info,
            libc::WEXITED | libc::WNOHANG | libc::WNOWAIT,
        );
        rc == 0 && info.si_pid() != 0
    }
}

fn reap(pid: libc::pid_t, flags: libc::c_int) -> Option<(libc::c_int, libc::rusage)> {
    // SAFETY: status and rusage are out-parameters of plain data.
    unsafe {
        let mut status = 0;
        let mut usage: libc::rusage = std::mem::zeroed();
        loop {
            let rc = libc::wait4(pid, &mut status, flags, &mut usage);
            if rc > 0 {
                return Some((status, usage));
            }
            if rc == -1 && std::io::Error::last_os_error().raw_os_error() == Some(libc::EINTR) {
                continue;
            }
            return None;
        }
    }
}

fn group_has_children(pgid: libc::pid_t) -> bool {
    // SAFETY: as in `leader_exited`.
    unsafe {
        let mut info: libc::siginfo_t = std::mem::zeroed();
        libc::waitid(
            libc::P_PGID,
            pgid as libc::id_t,
            &mut info,
            libc::WEXITED | libc::WNOHANG | libc::WNOWAIT,
        ) == 0
    }
}

fn rusage_cpu_s(ru: &libc::rusage) -> f64 {
    let tv = |t: libc::timeval| t.tv_sec as f64 + t.tv_usec as f64 / 1e6;
    tv(ru.ru_utime) + tv(ru.ru_stime)
}

/// Periodic `/proc` view of one process group.
struct TreeSampler {
    pgid: i64,
    tick_s: f64,
    page_mib: f64,
    peak_cpu_s: f64,
    peak_rss_mib: f64,
}

impl TreeSampler {
    fn new(pgid: libc::pid_t) -> Self {
        // SAFETY: sysconf only reads configuration values.
        let (ticks, page) = unsafe { (libc::sysconf(libc::_SC_CLK_TCK), libc::sysconf(libc::_SC_PAGESIZE)) };
        TreeSampler {
            pgid: pgid as i64,
            tick_s: 1.0 / ticks.max(1) as f64,
            page_mib: page.max(1) as f64 / (1024.0 * 1024.0),
            peak_cpu_s: 0.0,
            peak_rss_mib: 0.0,
        }
    }

    fn sample(&mut self) {
        let Ok(dir) = std::fs::read_dir("/proc") else { return };
        let mut ticks = 0u64;
        let mut pages = 0u64;
        for entry in dir.flatten() {
            let name = entry.file_name();
            let Some(pid) = name.to_str().filter(|s| s.bytes().all(|b| b.is_ascii_digit())) else {
                continue;
            };
            let Ok(stat) = std::fs::read_to_string(format!("/proc/{pid}/stat")) else { continue };
            if let Some(s) = parse_stat(&stat).filter(|s| s.pgrp == self.pgid) {
                // children already reaped inside the tree are folded into cutime/cstime
                ticks += s.utime + s.stime + s.cutime + s.cstime;
                if s.state != 'Z' {
                    pages += s.rss_pages;
                }
            }
        }
        self.peak_cpu_s = self.peak_cpu_s.max(ticks as f64 * self.tick_s);
        self.peak_rss_mib = self.peak_rss_mib.max(pages as f64 * self.page_mib);
    }
}

#[derive(Debug, PartialEq)]
pub(crate) struct ProcStat {
    pub state: char,
    pub pgrp: i64,
    pub utime: u64,
    pub stime: u64,
    pub cutime: u64,
    pub cstime: u64,
    pub rss_pages: u64,
}

/// Parses `/proc/<pid>/stat`. The command name may contain spaces and
/// parentheses, so fields are counted from the last `)`.
pub(crate) fn parse_stat(stat: &str) -> Option<ProcStat> {
    let rest = &stat[stat.rfind(')')? + 1..];
    let f: Vec<&str> = rest.split_whitespace().collect();
    // f[0] is field 3 (state)
    let num = |i: usize| f.get(i).and_then(|s| s.parse::<i64>().ok());
    Some(ProcStat {
        state: f.first()?.chars().next()?,
        pgrp: num(2)?,
        utime: num(11)?.max(0) as u64,
        stime: num(12)?.max(0) as u64,
        cutime: num(13)?.max(0) as u64,
        cstime: num(14)?.max(0) as u64,
        rss_pages: num(21)?.max(0) as u64,
    })
}

/// Processes still present in a process group, zombies excluded.
pub fn live_group_members(pgid: i64) -> Vec<i64> {
    let Ok(dir) = std::fs::read_dir("/proc") else { return Vec::new() };
    dir.flatten()
        .filter_map(|e| e.file_name().to_str()?.parse::<i64>().ok())
        .filter(|pid| {
            std::fs::read_to_string(format!("/proc/{pid}/stat"))
                .ok()
                .and_then(|s| parse_stat(&s))
                .is_some_and(|s| s.pgrp == pgid && s.state != 'Z')
        })
        .collect()
}
