//! Leaderboard artifacts: `report.json`, `matrix.csv` and a self-contained
//! `leaderboard.html`.
//!
//! Output depends only on the results and ranking, except for the
//! generation timestamp, which sits on one marked line of each file.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::runner::{AdapterStatus, Results, RunManifest};
use crate::scoring::{AdjudicatedResult, Ranking, ValidationClass};

pub const REPORT_JSON: &str = "report.json";
pub const MATRIX_CSV: &str = "matrix.csv";
pub const LEADERBOARD_HTML: &str = "leaderboard.html";

/// Cell value for adapters that were skipped at competition start.
pub const SKIP_CELL: &str = "skip";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("output directory {path} is not writable: {source}")]
    OutDirNotWritable { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Json,
    Csv,
    Html,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "html" => Ok(Format::Html),
            o => Err(format!("unknown report format `{o}` (expected json, csv or html)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixCell {
    pub code: String,
    pub validation_class: Option<ValidationClass>,
    /// Informal proof size over formal proof size, when both are known.
    pub db_factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixRow {
    pub problem_id: String,
    pub cells: Vec<MatrixCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    pub adapters: Vec<String>,
    pub rows: Vec<MatrixRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub generated_at: String,
    pub manifest: RunManifest,
    pub incomplete: bool,
    pub ranking: Ranking,
    pub matrix: Matrix,
}

/// Problems × adapters, in manifest order. Each cell shows the adjudicated
/// verdict code.
pub fn build_matrix(manifest: &RunManifest, adjudicated: &[AdjudicatedResult]) -> Matrix {
    let cells: HashMap<(&str, &str), &AdjudicatedResult> = adjudicated
        .iter()
        .map(|r| ((r.record.problem_id.as_str(), r.record.adapter_name.as_str()), r))
        .collect();
    let adapters: Vec<String> = manifest.adapters.iter().map(|a| a.name.clone()).collect();
    let rows = manifest
        .problems
        .iter()
        .map(|p| MatrixRow {
            problem_id: p.id.clone(),
            cells: manifest
                .adapters
                .iter()
                .map(|a| match (a.status, cells.get(&(p.id.as_str(), a.name.as_str()))) {
                    (AdapterStatus::Skipped, _) => MatrixCell { code: SKIP_CELL.into(), validation_class: None, db_factor: None },
                    (_, Some(r)) => MatrixCell {
                        code: r.record.verdict.code().into(),
                        validation_class: r.validation_class,
                        db_factor: r.db_factor,
                    },
                    // not run yet
                    (_, None) => MatrixCell { code: String::new(), validation_class: None, db_factor: None },
                })
                .collect(),
        })
        .collect();
    Matrix { adapters, rows }
}

pub fn bundle(results: &Results, adjudicated: &[AdjudicatedResult], ranking: &Ranking, generated_at: &str) -> ReportBundle {
    ReportBundle {
        generated_at: generated_at.to_string(),
        manifest: results.manifest.clone(),
        incomplete: results.incomplete,
        ranking: ranking.clone(),
        matrix: build_matrix(&results.manifest, adjudicated),
    }
}

pub fn render_json(b: &ReportBundle) -> String {
    let mut s = serde_json::to_string_pretty(b).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_csv(b: &ReportBundle) -> String {
    let mut out = String::from("problem_id");
    for a in &b.matrix.adapters {
        out.push(',');
        out.push_str(&csv_field(a));
    }
    out.push('\n');
    for row in &b.matrix.rows {
        out.push_str(&csv_field(&row.problem_id));
        for c in &row.cells {
            out.push(',');
            out.push_str(&c.code);
        }
        out.push('\n');
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

const STYLE: &str = "body{font-family:sans-serif;margin:2em;color:#222}\
table{border-collapse:collapse;margin-bottom:2em}\
th,td{border:1px solid #bbb;padding:3px 8px;text-align:center}\
th{background:#eee}td.good{background:#c8f0c8}td.fair{background:#f7ecb5}td.poor{background:#f5c6b8}\
tr.tier1 td{color:#a00}.meta{color:#555;font-size:90%}";

pub fn render_html(b: &ReportBundle) -> String {
    let m = &b.manifest;
    let mut h = String::new();
    h.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    let _ = writeln!(h, "<title>Leaderboard: {} {}</title>", esc(&m.corpus.name), esc(&m.corpus.version));
    let _ = writeln!(h, "<style>{STYLE}</style>\n</head>\n<body>");
    let _ = writeln!(h, "<h1>Leaderboard: {} {}</h1>", esc(&m.corpus.name), esc(&m.corpus.version));
    let _ = writeln!(
        h,
        "<p class=\"meta\">run {} started {} on {} ({}, {} cores, {} MiB); config {}</p>",
        esc(&m.run_id),
        esc(&m.started_at),
        esc(&m.host.cpu_model),
        esc(&m.host.os),
        m.host.logical_cores,
        m.host.total_ram_mib,
        esc(&m.config_hash[..m.config_hash.len().min(12)])
    );
    let _ = writeln!(h, "<p class=\"meta\" id=\"generated\">generated {}</p>", esc(&b.generated_at));
    if b.incomplete {
        h.push_str("<p><strong>Run incomplete: results are partial.</strong></p>\n");
    }

    h.push_str("<section id=\"ranking\">\n<h2>Ranking</h2>\n");
    if b.ranking.entries.is_empty() {
        h.push_str("<p>No records.</p>\n");
    } else {
        h.push_str("<table>\n<tr><th>#</th><th>prover</th><th>tier</th><th>solved</th><th>incorrect</th><th>novel</th><th>time on solved (s)</th><th>good</th><th>fair</th><th>poor</th><th>readable proofs</th></tr>\n");
        for e in &b.ranking.entries {
            let _ = writeln!(
                h,
                "<tr class=\"tier{}\"><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td><td>{:.3}</td><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>",
                e.tier,
                e.rank,
                esc(&e.adapter_name),
                e.tier,
                e.solved,
                e.incorrect,
                e.novel,
                e.total_time_s,
                e.class_counts.good,
                e.class_counts.fair,
                e.class_counts.poor,
                match e.readable_proofs {
                    crate::adapters::Readability::Maybe => "maybe",
                    crate::adapters::Readability::NotAvailable => "not available",
                }
            );
        }
        h.push_str("</table>\n");
    }
    h.push_str("</section>\n");

    h.push_str("<section id=\"matrix\">\n<h2>Results by problem</h2>\n");
    if b.matrix.rows.is_empty() {
        h.push_str("<p>No records.</p>\n");
    } else {
        h.push_str("<table>\n<tr><th>problem</th>");
        for a in &b.matrix.adapters {
            let _ = write!(h, "<th>{}</th>", esc(a));
        }
        h.push_str("</tr>\n");
        for row in &b.matrix.rows {
            let _ = write!(h, "<tr><th>{}</th>", esc(&row.problem_id));
            for c in &row.cells {
                let class = c
                    .validation_class
                    .and_then(|v| serde_json::to_value(v).ok())
                    .and_then(|v| v.as_str().map(|s| format!(" class=\"{s}\"")))
                    .unwrap_or_default();
                let title = c.db_factor.map(|f| format!(" title=\"dB factor {f:.2}\"")).unwrap_or_default();
                let _ = write!(h, "<td{class}{title}>{}</td>", esc(&c.code));
            }
            h.push_str("</tr>\n");
        }
        h.push_str("</table>\n");
    }
    h.push_str("<p class=\"meta\">P proved, D disproved, U unknown, T timeout, M memory out, E error, X unparseable output, skip prover not available. Shading marks validation time of correct answers: good &le; 1.5 s &lt; fair &le; 3 s &lt; poor. Hovering a correct answer shows its de Bruijn factor (informal size / formal size) when both proofs are available.</p>\n");
    h.push_str("</section>\n</body>\n</html>\n");
    h
}

/// Writes the requested formats into `out_dir`; returns the written paths.
pub fn render(bundle: &ReportBundle, formats: &[Format], out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let not_writable = |source| ReportError::OutDirNotWritable { path: out_dir.to_path_buf(), source };
    std::fs::create_dir_all(out_dir).map_err(not_writable)?;
    let mut written = BTreeMap::new();
    for f in formats {
        let (name, body) = match f {
            Format::Json => (REPORT_JSON, render_json(bundle)),
            Format::Csv => (MATRIX_CSV, render_csv(bundle)),
            Format::Html => (LEADERBOARD_HTML, render_html(bundle)),
        };
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(not_writable)?;
        written.insert(name, path);
    }
    Ok(written.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn html_escaping() {
        assert_eq!(esc("<a href='x'>&</a>"), "&lt;a href=&#39;x&#39;&gt;&amp;&lt;/a&gt;");
    }

    #[test]
    fn formats_parse() {
        let f: Vec<Format> = "html, csv,json".split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(f, [Format::Html, Format::Csv, Format::Json]);
        assert!("pdf".parse::<Format>().is_err());
    }
}
