//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{anyhow, ensure, Result};
use gasc_core::adapters::{load_adapters, Readability, Verdict};
use gasc_core::corpus::{select_problems, validate_corpus, Corpus, ExpectedStatus, Filter};
use gasc_core::geoform::{emit_gclc, parse_gclc, read_exchange_str, write_exchange_string};
use gasc_core::report::{self, Format};
use gasc_core::runner::{
    fold_events, replay_log, run_competition, Results, RunConfig, RunManifest, RunOptions, RunRecord, TimingMode,
    EVENTS_FILE, RESULTS_FILE,
};
use gasc_core::scoring::{
    adjudicate, classify_validation_time, rank, score_results, GroundTruth, ValidationClass,
};
use gasc_core::service::{self, RankingView, ResultsView, RunState, StatusSnapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let started = Instant::now();
    let mini_run = tempfile::tempdir().expect("tempdir");
    let mut passed = 0;
    let mut total = 0;
    let mut check = |n: usize, title: &str, f: &mut dyn FnMut() -> Result<String>| {
        total += 1;
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(anyhow!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => {
                passed += 1;
                println!("PASS {n:>2} {title}: {detail} ({secs:.1}s)");
            }
            Err(e) => println!("FAIL {n:>2} {title}: {e:#} ({secs:.1}s)"),
        }
    };

    check(1, "validation-time classes", &mut c1_validation_classes);
    check(2, "timeout enforcement", &mut c2_timeouts);
    check(3, "cpu accounting", &mut c3_cpu_accounting);
    check(4, "mini competition", &mut || c4_mini_competition(mini_run.path()));
    check(5, "score and report determinism", &mut || c5_determinism(mini_run.path()));
    check(6, "parser round trip", &mut c6_round_trip);
    check(7, "224-problem corpus", &mut c7_scale);
    check(8, "event-log replay", &mut || c8_replay(mini_run.path()));
    check(9, "service consistency under load", &mut c9_service_load);
    check(10, "incorrect claims rank last", &mut c10_tier_dominance);

    println!("acceptance: {passed}/{total} passed in {:.1}s", started.elapsed().as_secs_f64());
    if passed != total {
        std::process::exit(1);
    }
}

fn c1_validation_classes() -> Result<String> {
    use ValidationClass::*;
    let cases = [(0.0, Good), (1.0, Good), (1.5, Good), (1.500001, Fair), (3.0, Fair), (3.000001, Poor), (100.0, Poor)];
    for (t, want) in cases {
        let got = classify_validation_time(t)?;
        ensure!(got == want, "t = {t}: got {got:?}, want {want:?}");
    }
    Ok(format!("{} boundary values exact", cases.len()))
}

fn mini() -> Corpus {
    Corpus::load(&common::mini_corpus()).expect("mini corpus loads")
}

fn c2_timeouts() -> Result<String> {
    let t = Instant::now();
    let out = tempfile::tempdir()?;
    let c = mini();
    let sel: Vec<_> = c.entries().iter().take(1).collect();
    let spec = common::mock_spec("hanger", &["--behavior", "hang"]);
    let cfg = RunConfig {
        wall_limit_s: 1.0,
        cpu_limit_s: 1.0,
        repetitions: 20,
        workers: 4,
        timing_mode: TimingMode::Parallel,
        ..RunConfig::default()
    };
    let r = run_competition(&c, &sel, &[spec], &cfg, out.path(), &RunOptions::default())?;
    ensure!(r.records.len() == 20, "{} records", r.records.len());
    let mut walls = Vec::new();
    for rec in &r.records {
        ensure!(rec.verdict == Verdict::Timeout, "rep {}: {:?}", rec.repetition_index, rec.verdict);
        ensure!((1.0..=1.5).contains(&rec.wall_time_s), "rep {}: wall {}", rec.repetition_index, rec.wall_time_s);
        walls.push(rec.wall_time_s);
    }
    let elapsed = t.elapsed().as_secs_f64();
    ensure!(elapsed < 40.0, "took {elapsed:.1}s");
    let max = walls.iter().cloned().fold(0.0, f64::max);
    let min = walls.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(format!("20/20 Timeout, wall in [{min:.3}, {max:.3}] s"))
}

fn c3_cpu_accounting() -> Result<String> {
    let out = tempfile::tempdir()?;
    let c = mini();
    let sel: Vec<_> = c.entries().iter().take(1).collect();
    let spec = common::mock_spec("burner", &["--burn-cpu", "0.5"]);
    let cfg = RunConfig { repetitions: 10, timing_mode: TimingMode::Serial, ..RunConfig::default() };
    let r = run_competition(&c, &sel, &[spec], &cfg, out.path(), &RunOptions::default())?;
    let tol = f64::max(0.15 * 0.5, 0.1);
    let cpus: Vec<f64> = r.records.iter().map(|r| r.cpu_time_s).collect();
    let ok = cpus.iter().filter(|c| (**c - 0.5).abs() <= tol).count();
    ensure!(cpus.len() == 10 && ok >= 9, "{ok}/10 within ±{tol}s: {cpus:?}");
    Ok(format!("{ok}/10 within ±{tol}s, cpu {:.3}..{:.3} s", cpus.iter().cloned().fold(f64::INFINITY, f64::min), cpus.iter().cloned().fold(0.0, f64::max)))
}

/// Independent per-adapter statistics and the brute-force ordering of them.
fn oracle_order(records: &[RunRecord], expected: &HashMap<String, ExpectedStatus>) -> Vec<Vec<String>> {
    #[derive(Default, Clone)]
    struct Stats {
        incorrect: usize,
        solved: usize,
        time: f64,
    }
    let mut stats: BTreeMap<String, Stats> = BTreeMap::new();
    for r in records {
        let s = stats.entry(r.adapter_name.clone()).or_default();
        let truth = expected[&r.problem_id];
        let claims_proof = r.verdict == Verdict::Proved;
        let claims_refutation = r.verdict == Verdict::Disproved;
        let right = (claims_proof && truth == ExpectedStatus::Proved) || (claims_refutation && truth == ExpectedStatus::Disproved);
        let wrong = (claims_proof && truth == ExpectedStatus::Disproved) || (claims_refutation && truth == ExpectedStatus::Proved);
        if right {
            s.solved += 1;
            s.time += r.wall_time_s;
        }
        if wrong {
            s.incorrect += 1;
        }
    }
    let names: Vec<String> = stats.keys().cloned().collect();
    let key = |n: &String| {
        let s = &stats[n];
        (s.incorrect > 0, std::cmp::Reverse(s.solved), s.time, n.clone())
    };
    let mut valid = Vec::new();
    for perm in permutations(&names) {
        let sorted = perm.windows(2).all(|w| key(&w[0]).partial_cmp(&key(&w[1])) != Some(std::cmp::Ordering::Greater));
        if sorted {
            valid.push(perm);
        }
    }
    valid
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn c4_mini_competition(out: &Path) -> Result<String> {
    let c = mini();
    let sel: Vec<_> = c.entries().iter().collect();
    let specs = load_adapters(&common::mock_adapters_file())?;
    let cfg = RunConfig {
        wall_limit_s: 2.0,
        cpu_limit_s: 2.0,
        workers: 4,
        timing_mode: TimingMode::Parallel,
        ..RunConfig::default()
    };
    let options = RunOptions { keep_workdirs: false, search_dirs: vec![common::bin_dir()] };
    let t = Instant::now();
    let results = run_competition(&c, &sel, &specs, &cfg, out, &options)?;
    let elapsed = t.elapsed().as_secs_f64();
    ensure!(elapsed < 60.0, "took {elapsed:.1}s");
    ensure!(results.records.len() == 80, "{} records", results.records.len());
    let allowed = [Verdict::Proved, Verdict::Timeout, Verdict::Error, Verdict::Unparseable];
    let seen: BTreeSet<String> = results.records.iter().map(|r| r.verdict.to_string()).collect();
    ensure!(results.records.iter().all(|r| allowed.contains(&r.verdict)), "verdicts {seen:?}");

    let expected: HashMap<String, ExpectedStatus> =
        c.entries().iter().map(|e| (e.id().to_string(), e.meta.expected_status)).collect();
    let oracle = oracle_order(&results.records, &expected);
    let want = ["fast-solver", "slow-solver", "hanger", "liar"];
    ensure!(oracle.len() == 1, "oracle admits {} orderings", oracle.len());
    ensure!(oracle[0] == want, "oracle order {:?}", oracle[0]);
    let (_, ranking) = score_results(&results, Some(&c), Some(out))?;
    ensure!(ranking.order() == want, "ranking {:?}", ranking.order());
    Ok(format!("80 records in {elapsed:.1}s, verdicts {seen:?}, ranking {}", want.join(" > ")))
}

fn strip_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.contains("\"generated_at\"") && !l.contains("id=\"generated\"")).collect::<Vec<_>>().join("\n")
}

fn c5_determinism(run_dir: &Path) -> Result<String> {
    let corpus = mini();
    let render_once = |stamp: &str| -> Result<BTreeMap<String, (String, String)>> {
        let results = Results::load(&run_dir.join(RESULTS_FILE))?;
        let (adjudicated, ranking) = score_results(&results, Some(&corpus), Some(run_dir))?;
        let out = tempfile::tempdir()?;
        std::fs::write(out.path().join("ranking.json"), ranking.to_canonical_json())?;
        let bundle = report::bundle(&results, &adjudicated, &ranking, stamp);
        report::render(&bundle, &[Format::Json, Format::Csv, Format::Html], out.path())?;
        let mut files = BTreeMap::new();
        for name in ["ranking.json", "matrix.csv", "report.json", "leaderboard.html"] {
            let text = std::fs::read_to_string(out.path().join(name))?;
            files.insert(name.to_string(), (strip_timestamp(&text), text));
        }
        Ok(files)
    };
    let a = render_once("2026-01-01T00:00:00.000Z")?;
    let b = render_once("2026-06-30T12:34:56.789Z")?;
    for (name, (stripped, raw)) in &a {
        let (other_stripped, other_raw) = &b[name];
        ensure!(stripped == other_stripped, "{name} differs beyond the timestamp");
        let diff_lines = raw.lines().zip(other_raw.lines()).filter(|(x, y)| x != y).count();
        ensure!(diff_lines <= 1, "{name}: {diff_lines} lines differ");
    }
    Ok("ranking.json, matrix.csv, report.json, leaderboard.html identical modulo timestamp".into())
}

fn c6_round_trip() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a5c);
    let mut failures = 0;
    let mut max_steps = 0;
    for _ in 0..500 {
        let p = common::random_problem(&mut rng, 20);
        max_steps = max_steps.max(p.construction.steps.len());
        let gclc_ok = parse_gclc(&emit_gclc(&p)).map(|q| q == p).unwrap_or(false);
        let exchange_ok = read_exchange_str(&write_exchange_string(&p)).map(|q| q == p).unwrap_or(false);
        if !(gclc_ok && exchange_ok) {
            failures += 1;
        }
    }
    ensure!(failures == 0, "{failures}/500 failed");
    Ok(format!("500/500 in both dialects, up to {max_steps} steps"))
}

fn c7_scale() -> Result<String> {
    let dir = tempfile::tempdir()?;
    common::write_synthetic_corpus(&mut ChaCha8Rng::seed_from_u64(224), dir.path(), 224);
    let t = Instant::now();
    let report = validate_corpus(dir.path())?;
    let elapsed = t.elapsed().as_secs_f64();
    ensure!(report.passed(), "{} invalid entries", report.failed().count());
    ensure!(elapsed < 2.0, "validation took {elapsed:.3}s");
    let corpus = Corpus::load(dir.path())?;
    let ids: Vec<&str> = select_problems(&corpus, &Filter::default())?.iter().map(|e| e.id()).collect();
    let unique: BTreeSet<&str> = ids.iter().copied().collect();
    ensure!(ids.len() == 224 && unique.len() == 224, "{} ids, {} unique", ids.len(), unique.len());
    ensure!(ids.windows(2).all(|w| w[0] < w[1]), "ids not sorted");
    Ok(format!("validated in {:.0} ms, 224 sorted unique ids", elapsed * 1000.0))
}

fn c8_replay(run_dir: &Path) -> Result<String> {
    let on_disk = std::fs::read_to_string(run_dir.join(RESULTS_FILE))?;
    let replayed = replay_log(&run_dir.join(EVENTS_FILE))?;
    ensure!(replayed.to_canonical_json() == on_disk, "replay differs from results.json");

    let log = std::fs::read_to_string(run_dir.join(EVENTS_FILE))?;
    let cut = log.len() / 2;
    let cut = (0..=cut).rev().find(|i| log.is_char_boundary(*i)).unwrap_or(0);
    let partial = Results::from_state(&fold_events(&log[..cut])?);
    ensure!(partial.incomplete, "truncated log not flagged incomplete");
    let n = partial.records.len();
    ensure!(n > 0 && n < replayed.records.len(), "{n} partial records");
    ensure!(partial.records.iter().all(|r| replayed.records.contains(r)), "partial record not in the full run");
    Ok(format!("byte-identical ({} bytes); half log gives {n} records, incomplete", on_disk.len()))
}

/// Every file under `dir` with its bytes.
fn tree_bytes(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else if let Ok(b) = std::fs::read(&p) {
                out.insert(p, b);
            }
        }
    }
    out
}

#[derive(Default)]
struct PollStats {
    requests: AtomicUsize,
    invalid: AtomicUsize,
    compared: AtomicUsize,
    mismatched: AtomicUsize,
    running_seen: AtomicUsize,
}

async fn poll_once(client: &reqwest::Client, base: &str, stats: &PollStats, manifests: &tokio::sync::Mutex<HashMap<String, RunManifest>>) {
    let bad = || {
        stats.invalid.fetch_add(1, Ordering::Relaxed);
    };
    stats.requests.fetch_add(3, Ordering::Relaxed);
    let Ok(resp) = client.get(format!("{base}/status")).send().await else { return bad() };
    let code = resp.status().as_u16();
    let Ok(body) = resp.text().await else { return bad() };
    if code == 503 {
        let idle = serde_json::from_str::<serde_json::Value>(&body).map(|v| v["state"] == "idle").unwrap_or(false);
        if !idle {
            bad();
        }
        return;
    }
    match serde_json::from_str::<StatusSnapshot>(&body) {
        Ok(s) if code == 200 && s.is_consistent() => {
            if s.state == RunState::Running {
                stats.running_seen.fetch_add(1, Ordering::Relaxed);
            }
        }
        _ => return bad(),
    }
    let results: ResultsView = match client.get(format!("{base}/results")).send().await {
        Ok(r) if r.status() == 200 => match r.json().await {
            Ok(v) => v,
            Err(_) => return bad(),
        },
        _ => return bad(),
    };
    let ranking: RankingView = match client.get(format!("{base}/ranking")).send().await {
        Ok(r) if r.status() == 200 => match r.json().await {
            Ok(v) => v,
            Err(_) => return bad(),
        },
        _ => return bad(),
    };
    if results.run_id != ranking.run_id || results.completed_jobs != ranking.completed_jobs {
        // different log prefixes; nothing to compare
        return;
    }
    let manifest = {
        let mut cache = manifests.lock().await;
        if !cache.contains_key(&results.run_id) {
            stats.requests.fetch_add(1, Ordering::Relaxed);
            match client.get(format!("{base}/manifest")).send().await {
                Ok(r) => match r.json::<RunManifest>().await {
                    Ok(m) => {
                        cache.insert(results.run_id.clone(), m);
                    }
                    Err(_) => return bad(),
                },
                Err(_) => return bad(),
            }
        }
        cache[&results.run_id].clone()
    };
    let truth = GroundTruth::from_manifest(&manifest);
    let expected = adjudicate(&results.records, &truth, None).map(|a| rank(&a));
    stats.compared.fetch_add(1, Ordering::Relaxed);
    if expected.ok().as_ref() != Some(&ranking.ranking) {
        stats.mismatched.fetch_add(1, Ordering::Relaxed);
    }
}

fn pollers(rt: &tokio::runtime::Runtime, base: &str, n: usize, duration: Duration) -> Arc<PollStats> {
    let stats = Arc::new(PollStats::default());
    let manifests = Arc::new(tokio::sync::Mutex::new(HashMap::new()));
    rt.block_on(async {
        let client = reqwest::Client::new();
        let deadline = tokio::time::Instant::now() + duration;
        let tasks: Vec<_> = (0..n)
            .map(|_| {
                let (client, base, stats, manifests) = (client.clone(), base.to_string(), stats.clone(), manifests.clone());
                tokio::spawn(async move {
                    while tokio::time::Instant::now() < deadline {
                        poll_once(&client, &base, &stats, &manifests).await;
                        tokio::time::sleep(Duration::from_millis(20)).await;
                    }
                })
            })
            .collect();
        for t in tasks {
            t.await.expect("poller task");
        }
    });
    stats
}

fn c9_service_load() -> Result<String> {
    let run = tempfile::tempdir()?;
    let run_dir = run.path().to_path_buf();
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    rt.spawn(service::serve(listener, run_dir.clone()));

    let runner_dir = run_dir.clone();
    let runner = std::thread::spawn(move || -> Result<usize> {
        std::thread::sleep(Duration::from_millis(300));
        let c = mini();
        let sel: Vec<_> = c.entries().iter().collect();
        let specs = load_adapters(&common::mock_adapters_file())?;
        let cfg = RunConfig { wall_limit_s: 2.0, cpu_limit_s: 2.0, workers: 4, timing_mode: TimingMode::Parallel, ..RunConfig::default() };
        let options = RunOptions { keep_workdirs: false, search_dirs: vec![common::bin_dir()] };
        Ok(run_competition(&c, &sel, &specs, &cfg, &runner_dir, &options)?.records.len())
    });
    let live = pollers(&rt, &base, 50, Duration::from_secs(10));
    let records = runner.join().map_err(|_| anyhow!("runner panicked"))??;
    ensure!(records == 80, "live run produced {records} records");

    let before = tree_bytes(&run_dir);
    let idle = pollers(&rt, &base, 50, Duration::from_secs(2));
    ensure!(tree_bytes(&run_dir) == before, "run directory changed while serving a finished run");

    let requests = live.requests.load(Ordering::Relaxed) + idle.requests.load(Ordering::Relaxed);
    let invalid = live.invalid.load(Ordering::Relaxed) + idle.invalid.load(Ordering::Relaxed);
    let compared = live.compared.load(Ordering::Relaxed) + idle.compared.load(Ordering::Relaxed);
    let mismatched = live.mismatched.load(Ordering::Relaxed) + idle.mismatched.load(Ordering::Relaxed);
    ensure!(invalid == 0, "{invalid} invalid responses of {requests}");
    ensure!(mismatched == 0, "{mismatched}/{compared} ranking mismatches");
    ensure!(live.running_seen.load(Ordering::Relaxed) > 0, "never observed the run in progress");
    ensure!(live.compared.load(Ordering::Relaxed) > 0, "no same-snapshot pair observed during the run");
    Ok(format!("{requests} requests, 0 invalid, {compared} same-snapshot rankings equal, run dir unchanged"))
}

fn c10_tier_dominance() -> Result<String> {
    let verdicts = [
        Verdict::Proved,
        Verdict::Disproved,
        Verdict::Unknown,
        Verdict::Timeout,
        Verdict::MemOut,
        Verdict::Error,
        Verdict::Unparseable,
    ];
    let statuses = [ExpectedStatus::Proved, ExpectedStatus::Disproved, ExpectedStatus::Open];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut pairs = 0;
    for set in 0..200 {
        let n_adapters = rng.random_range(2..=6);
        let n_problems = rng.random_range(1..=15);
        let mut truth = GroundTruth::default();
        let mut expected = Vec::new();
        for p in 0..n_problems {
            let s = statuses[rng.random_range(0..statuses.len())];
            truth.insert(&format!("GEO{p:04}"), s, None);
            expected.push(s);
        }
        let mut records = Vec::new();
        let mut incorrect = vec![0usize; n_adapters];
        for (a, bad) in incorrect.iter_mut().enumerate() {
            // some adapters are reliable, some are not
            let reliability: f64 = rng.random();
            truth.set_readability(&format!("a{a}"), Readability::NotAvailable);
            for (p, status) in expected.iter().enumerate() {
                let verdict = if rng.random_bool(reliability) {
                    match status {
                        ExpectedStatus::Proved => Verdict::Proved,
                        ExpectedStatus::Disproved => Verdict::Disproved,
                        ExpectedStatus::Open => Verdict::Unknown,
                    }
                } else {
                    verdicts[rng.random_range(0..verdicts.len())]
                };
                let wrong = matches!(
                    (verdict, status),
                    (Verdict::Proved, ExpectedStatus::Disproved) | (Verdict::Disproved, ExpectedStatus::Proved)
                );
                *bad += usize::from(wrong);
                for rep in 0..rng.random_range(1..=3u32) {
                    records.push(RunRecord {
                        problem_id: format!("GEO{p:04}"),
                        adapter_name: format!("a{a}"),
                        repetition_index: rep,
                        verdict,
                        wall_time_s: (rng.random_range(0.0..5.0f64) * 1e6).round() / 1e6,
                        cpu_time_s: 0.0,
                        max_rss_mib: 0.0,
                        exit_code: Some(0),
                        stdout_excerpt: String::new(),
                        stderr_excerpt: String::new(),
                        proof_artifact_path: None,
                        diagnostic: None,
                    });
                }
            }
        }
        let ranking = rank(&adjudicate(&records, &truth, None)?);
        let pos: HashMap<&str, usize> = ranking.entries.iter().enumerate().map(|(i, e)| (e.adapter_name.as_str(), i)).collect();
        for x in 0..n_adapters {
            for y in 0..n_adapters {
                if incorrect[x] > 0 && incorrect[y] == 0 {
                    pairs += 1;
                    let (px, py) = (pos[format!("a{x}").as_str()], pos[format!("a{y}").as_str()]);
                    ensure!(py < px, "set {set}: a{y} (0 incorrect) at {py} after a{x} ({} incorrect) at {px}", incorrect[x]);
                }
            }
        }
    }
    ensure!(pairs > 0, "no set had both kinds of adapter");
    Ok(format!("200 sets, {pairs} (clean, incorrect) pairs all ordered"))
}
