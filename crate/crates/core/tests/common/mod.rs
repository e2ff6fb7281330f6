#![allow(dead_code)]

use std::path::{Path, PathBuf};

use gasc_core::adapters::{parse_adapters, AdapterSpec};
use gasc_core::geoform::{
    Conjecture, Construction, Coord, FreePoint, GeoProblem, Name, ObjectKind, Predicate, ProblemId, Step, StepOp,
};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn mini_corpus() -> PathBuf {
    repo_root().join("corpora/mini")
}

pub fn mock_adapters_file() -> PathBuf {
    repo_root().join("adapters/mocks.json")
}

pub fn mockprover() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_mockprover"))
}

pub fn gasc() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_gasc"))
}

/// Directory holding the built binaries, for program lookup.
pub fn bin_dir() -> PathBuf {
    mockprover().parent().unwrap().to_path_buf()
}

/// Mock adapter spec running `mockprover <flags> {input}`.
pub fn mock_spec(name: &str, flags: &[&str]) -> AdapterSpec {
    let mut argv: Vec<String> = vec![mockprover().display().to_string()];
    argv.extend(flags.iter().map(|s| s.to_string()));
    argv.push("{input}".into());
    let doc = serde_json::json!({"adapters": [{
        "name": name,
        "input_dialect": "gclc",
        "command_template": argv,
        "classification_rules": [
            {"pattern": "(?m)^RESULT: proved$", "verdict": "proved"},
            {"pattern": "(?m)^RESULT: disproved$", "verdict": "disproved"}
        ],
        "exit_code_map": {"3": "error"},
        "readable_proofs": "not_available"
    }]});
    parse_adapters(&doc.to_string()).unwrap().remove(0)
}

fn coord<R: Rng>(rng: &mut R) -> Coord {
    let whole: i32 = rng.random_range(-50..=50);
    let s = match rng.random_range(0..3) {
        0 => whole.to_string(),
        1 => format!("{whole}.{}", rng.random_range(0..10)),
        _ => format!("{whole}.{:02}", rng.random_range(0..100)),
    };
    Coord::new(s).unwrap()
}

/// Random well-formed problem with at most `max_steps` construction steps.
pub fn random_problem<R: Rng>(rng: &mut R, max_steps: usize) -> GeoProblem {
    let mut points: Vec<Name> = Vec::new();
    let mut lines: Vec<Name> = Vec::new();
    let mut counter = 0usize;
    let mut fresh = |prefix: &str, rng: &mut R| {
        counter += 1;
        let prime = if rng.random_bool(0.2) { "'" } else { "" };
        Name::new(format!("{prefix}{counter}{prime}")).unwrap()
    };

    let n_free = rng.random_range(1..=5);
    let mut free_points = Vec::new();
    for _ in 0..n_free {
        let name = fresh("P", rng);
        points.push(name.clone());
        free_points.push(FreePoint { name, x: coord(rng), y: coord(rng) });
    }

    let n_steps = rng.random_range(0..=max_steps);
    let mut steps = Vec::new();
    while steps.len() < n_steps {
        let op = *StepOp::ALL.choose(rng).unwrap();
        let mut args = Vec::new();
        for kind in op.signature() {
            let pool = match kind {
                ObjectKind::Point => &points,
                ObjectKind::Line => &lines,
                ObjectKind::Circle => unreachable!("no step takes a circle"),
            };
            match pool.choose(rng) {
                Some(n) => args.push(n.clone()),
                None => break,
            }
        }
        if args.len() != op.signature().len() {
            continue;
        }
        let out = match op.result_kind() {
            ObjectKind::Point => {
                let n = fresh("Q", rng);
                points.push(n.clone());
                n
            }
            ObjectKind::Line => {
                let n = fresh("l", rng);
                lines.push(n.clone());
                n
            }
            ObjectKind::Circle => fresh("k", rng),
        };
        steps.push(Step { op, args, out });
    }

    let predicate = *Predicate::ALL.choose(rng).unwrap();
    let args = (0..predicate.arity()).map(|_| points.choose(rng).unwrap().clone()).collect();
    let id = ProblemId::new(format!("GEO{:04}", rng.random_range(0..10_000))).unwrap();
    let p = GeoProblem {
        id,
        construction: Construction { free_points, steps },
        conjecture: Conjecture { predicate, args },
    };
    p.validate().unwrap();
    p
}

/// Writes a corpus of `n` generated problems into `dir`.
pub fn write_synthetic_corpus<R: Rng>(rng: &mut R, dir: &Path, n: usize) {
    use gasc_core::geoform::write_exchange_string;
    std::fs::create_dir_all(dir).unwrap();
    let axioms = ["neutral", "euclidean", "hyperbolic", "projective", "other"];
    let types = ["constructive", "ruler_compass", "inequality", "other"];
    let statuses = ["proved", "disproved", "open"];
    let mut entries = Vec::new();
    for i in 0..n {
        let mut p = random_problem(rng, 20);
        p.id = ProblemId::new(format!("GEO{:04}", i + 1)).unwrap();
        let file = format!("GEO{:04}.gf.json", i + 1);
        std::fs::write(dir.join(&file), write_exchange_string(&p)).unwrap();
        entries.push(serde_json::json!({
            "file": file,
            "axiom_system": axioms[i % axioms.len()],
            "conjecture_type": types[i % types.len()],
            "expected_status": statuses[i % statuses.len()],
            "source": "synthetic"
        }));
    }
    let manifest = serde_json::json!({"name": "synthetic", "version": "1", "entries": entries});
    std::fs::write(dir.join("corpus.json"), serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
}
