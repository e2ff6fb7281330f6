//! Scriptable stand-in prover for hermetic tests.
//!
//! `prove` answers honestly when ground truth is available (`--answers` or
//! `$GASC_CORPUS`): it prints `RESULT: proved` for problems expected proved
//! and `RESULT: gave up` otherwise. Without ground truth it always proves.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use gasc_core::corpus::{Corpus, ExpectedStatus};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Behavior {
    Prove,
    Disprove,
    Hang,
    Wrong,
    Crash,
    Garbage,
}

#[derive(Debug, Parser)]
#[command(name = "mockprover", about = "Test double for a geometry prover")]
struct Args {
    #[arg(long, value_enum, default_value = "prove")]
    behavior: Behavior,
    /// Sleep this many seconds before answering.
    #[arg(long, default_value_t = 0.0)]
    delay_wall: f64,
    /// Busy-loop until this much CPU time has been used.
    #[arg(long, default_value_t = 0.0)]
    burn_cpu: f64,
    /// Corpus consulted by `prove`; defaults to `$GASC_CORPUS`.
    #[arg(long)]
    answers: Option<PathBuf>,
    /// Start a child that ignores SIGTERM and sleeps forever.
    #[arg(long)]
    spawn_child: bool,
    #[arg(long)]
    ignore_term: bool,
    /// Hold `<dir>/lock` while running; record overlaps in `<dir>/overlap`.
    #[arg(long)]
    probe_dir: Option<PathBuf>,
    /// Write a proof text to this file (relative to the working directory).
    #[arg(long)]
    proof_file: Option<PathBuf>,
    /// Allocate and touch this many MiB.
    #[arg(long, default_value_t = 0)]
    alloc_mib: usize,
    input: PathBuf,
}

const CRASH_EXIT: i32 = 3;

fn main() -> Result<()> {
    let args = Args::parse();
    if args.ignore_term {
        // SAFETY: installing SIG_IGN has no preconditions.
        unsafe { libc::signal(libc::SIGTERM, libc::SIG_IGN) };
    }
    let problem_id = std::env::var("GASC_PROBLEM_ID").ok().unwrap_or_else(|| {
        args.input.file_name().and_then(|s| s.to_str()).and_then(|s| s.split('.').next()).unwrap_or("").to_string()
    });
    std::fs::metadata(&args.input).with_context(|| format!("cannot read input {}", args.input.display()))?;

    let lock = match &args.probe_dir {
        Some(dir) => Some(acquire_probe(dir)?),
        None => None,
    };
    if args.spawn_child {
        let exe = std::env::current_exe()?;
        Command::new(exe)
            .args(["--behavior", "hang", "--ignore-term"])
            .arg(&args.input)
            .spawn()
            .context("cannot spawn child")?;
    }
    let _hold = touch_memory(args.alloc_mib);
    burn_cpu(args.burn_cpu);
    if args.delay_wall > 0.0 {
        std::thread::sleep(Duration::from_secs_f64(args.delay_wall));
    }

    if args.behavior == Behavior::Crash {
        if let Some(l) = lock {
            release_probe(&l);
        }
        std::process::exit(CRASH_EXIT);
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "mockprover: problem {problem_id}")?;
    let code = match args.behavior {
        Behavior::Prove => {
            let line = match expected_status(args.answers.as_deref(), &problem_id)? {
                None | Some(ExpectedStatus::Proved) => "RESULT: proved",
                Some(_) => "RESULT: gave up",
            };
            writeln!(out, "{line}")?;
            0
        }
        Behavior::Disprove => {
            writeln!(out, "RESULT: disproved")?;
            0
        }
        Behavior::Wrong => {
            writeln!(out, "RESULT: proved")?;
            0
        }
        Behavior::Hang => loop {
            std::thread::sleep(Duration::from_secs(3600));
        },
        Behavior::Crash => unreachable!("handled above"),
        Behavior::Garbage => {
            let mut rng = rand::rng();
            let n = rng.random_range(1..6);
            for _ in 0..n {
                let word: String = (0..rng.random_range(3..12)).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
                writeln!(out, "{word}")?;
            }
            0
        }
    };
    out.flush()?;
    if let Some(name) = &args.proof_file {
        std::fs::write(name, format!("proof of {problem_id}\nby mockprover\n"))?;
    }
    if let Some(l) = lock {
        release_probe(&l);
    }
    std::process::exit(code);
}

fn expected_status(answers: Option<&Path>, problem_id: &str) -> Result<Option<ExpectedStatus>> {
    let path = match answers.map(Path::to_path_buf).or_else(|| std::env::var_os("GASC_CORPUS").map(PathBuf::from)) {
        Some(p) => p,
        None => return Ok(None),
    };
    let corpus = Corpus::load(&path).with_context(|| format!("cannot load answers from {}", path.display()))?;
    Ok(corpus.get(problem_id).map(|e| e.meta.expected_status))
}

fn burn_cpu(seconds: f64) {
    if seconds <= 0.0 {
        return;
    }
    let cpu_now = || {
        let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
        // SAFETY: ts is a valid out-pointer.
        unsafe { libc::clock_gettime(libc::CLOCK_PROCESS_CPUTIME_ID, &mut ts) };
        ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
    };
    let target = cpu_now() + seconds;
    let mut x = 0u64;
    while cpu_now() < target {
        for i in 0..10_000u64 {
            x = std::hint::black_box(x.wrapping_mul(6364136223846793005).wrapping_add(i));
        }
    }
}

fn touch_memory(mib: usize) -> Vec<u8> {
    let mut v = vec![0u8; mib * 1024 * 1024];
    for i in (0..v.len()).step_by(4096) {
        v[i] = 1;
    }
    // hold the pages for a while so the sampler sees them
    if mib > 0 {
        std::thread::sleep(Duration::from_millis(300));
    }
    std::hint::black_box(v)
}

struct ProbeLock(PathBuf);

fn acquire_probe(dir: &Path) -> Result<ProbeLock> {
    std::fs::create_dir_all(dir)?;
    let lock = dir.join("lock");
    match std::fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
            let mut f = std::fs::OpenOptions::new().create(true).append(true).open(dir.join("overlap"))?;
            writeln!(f, "{}", std::process::id())?;
        }
        Err(e) => return Err(e.into()),
    }
    Ok(ProbeLock(lock))
}

fn release_probe(l: &ProbeLock) {
    let _ = std::fs::remove_file(&l.0);
}
