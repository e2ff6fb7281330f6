mod common;

use std::path::Path;
use std::process::{Command, Output};

fn gasc(args: &[&str]) -> Output {
    Command::new(common::gasc()).args(args).env_remove("GASC_CONFIG").output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

/// File content with the timestamp line removed.
fn without_timestamp(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"generated_at\"") && !l.contains("id=\"generated\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn corpus_subcommands() {
    let mini = common::mini_corpus();
    let o = gasc(&["corpus", "validate", mini.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let o = gasc(&["corpus", "list", mini.to_str().unwrap(), "--axiom", "projective"]);
    assert_eq!(o.status.code(), Some(0));
    let ids: Vec<String> = text(&o.stdout).lines().map(|l| l.split('\t').next().unwrap().to_string()).collect();
    assert_eq!(ids, ["GEO0017", "GEO0018"]);

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("corpus.json"),
        r#"{"name":"x","version":"1","entries":[{"file":"GEO0001.gcl","axiom_system":"other","conjecture_type":"other","expected_status":"open"}]}"#,
    )
    .unwrap();
    std::fs::write(dir.path().join("GEO0001.gcl"), "prove { collinear A B C }\n").unwrap();
    let o = gasc(&["corpus", "validate", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("undefined name"), "{}", text(&o.stderr));
}

#[test]
fn usage_errors_exit_2() {
    let o = gasc(&["run", "--adapters", "a.json", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("--corpus"));
    assert!(text(&o.stderr).contains("Usage"));
    assert_eq!(gasc(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gasc(&["run", "--corpus", "c", "--out", "o", "--wall", "soon"]).status.code(), Some(2));
    assert_eq!(o.stdout.len(), 0);
}

#[test]
fn help_lists_every_flag() {
    let expect: &[(&[&str], &[&str])] = &[
        (&[], &["convert", "corpus", "run", "score", "report", "serve", "watch", "--config", "--verbose", "--quiet", "--color"]),
        (&["convert"], &["--from", "--to"]),
        (&["corpus", "validate"], &["<CORPUS>"]),
        (&["corpus", "list"], &["--axiom", "--type", "--id"]),
        (&["run"], &["--corpus", "--adapters", "--out", "--wall", "--cpu", "--mem", "--workers", "--timing", "--reps", "--grace", "--keep-workdirs"]),
        (&["score"], &["--results", "--corpus", "--out"]),
        (&["report"], &["--results", "--format", "--out"]),
        (&["serve"], &["--run", "--bind"]),
        (&["watch"], &["<URL>", "--interval", "--retries"]),
    ];
    for (sub, flags) in expect {
        let mut args = sub.to_vec();
        args.push("--help");
        let o = gasc(&args);
        assert_eq!(o.status.code(), Some(0), "{sub:?}");
        let help = text(&o.stdout);
        for f in *flags {
            assert!(help.contains(f), "{sub:?} help lacks {f}");
        }
    }
}

#[test]
fn convert_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let src = common::mini_corpus().join("GEO0018.gcl");
    let json = dir.path().join("GEO0018.gf.json");
    let back = dir.path().join("back.gcl");
    assert!(gasc(&["convert", "--to", "exchange", src.to_str().unwrap(), json.to_str().unwrap()]).status.success());
    assert!(gasc(&["convert", "--to", "gclc", json.to_str().unwrap(), back.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read_to_string(&src).unwrap(), std::fs::read_to_string(&back).unwrap());
    let o = gasc(&["convert", "--to", "ggb", src.to_str().unwrap()]);
    assert!(text(&o.stdout).contains("Prove(AreCollinear(P, Q, R))"));
    let o = gasc(&["convert", "--to", "gclc", dir.path().join("none.gcl").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_score_report_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let mini = common::mini_corpus();
    let o = gasc(&[
        "-q", "run", "--corpus", mini.to_str().unwrap(),
        "--adapters", common::mock_adapters_file().to_str().unwrap(),
        "--out", run.to_str().unwrap(), "--id", "GEO0001,GEO0014,GEO0020",
        "--wall", "1", "--workers", "6", "--timing", "parallel",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    assert!(run.join("results.json").exists());

    let mut snapshots = Vec::new();
    for round in 0..2 {
        let out = dir.path().join(format!("report{round}"));
        let ranking = out.join("ranking.json");
        std::fs::create_dir_all(&out).unwrap();
        let o = gasc(&["score", "--results", run.to_str().unwrap(), "--corpus", mini.to_str().unwrap(), "--out", ranking.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        let o = gasc(&["report", "--results", run.join("results.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        let files = ["ranking.json", "matrix.csv", "report.json", "leaderboard.html"];
        snapshots.push(files.map(|f| without_timestamp(&out.join(f))));
        std::thread::sleep(std::time::Duration::from_millis(20));
    }
    assert_eq!(snapshots[0], snapshots[1]);
    let csv = &snapshots[0][1];
    assert!(csv.starts_with("problem_id,fast-solver,slow-solver,hanger,liar"));
    assert!(csv.contains("GEO0014,X,X,T,P"));
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gasc.toml");
    std::fs::write(&cfg, "[run]\nwall_limit_s = 0.7\nworkers = 3\n").unwrap();
    let mini = common::mini_corpus();
    let adapters = common::mock_adapters_file();
    let wall_of = |out: &Path, extra: &[&str]| {
        let mut args = vec!["-q", "run", "--corpus", mini.to_str().unwrap(), "--adapters", adapters.to_str().unwrap()];
        args.extend(["--out", out.to_str().unwrap(), "--id", "GEO0001"]);
        args.extend(extra);
        let o = Command::new(common::gasc()).args(&args).env("GASC_CONFIG", &cfg).output().unwrap();
        assert!(o.status.success(), "{}", text(&o.stderr));
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        (m["config"]["wall_limit_s"].as_f64().unwrap(), m["config"]["workers"].as_u64().unwrap(), m["config"]["cpu_limit_s"].as_f64().unwrap())
    };
    assert_eq!(wall_of(&dir.path().join("a"), &[]), (0.7, 3, 10.0));
    assert_eq!(wall_of(&dir.path().join("b"), &["--wall", "0.9"]), (0.9, 3, 10.0));

    std::fs::write(&cfg, "[run]\nwall = 1\n").unwrap();
    let o = Command::new(common::gasc()).args(["corpus", "validate", mini.to_str().unwrap()]).env("GASC_CONFIG", &cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
