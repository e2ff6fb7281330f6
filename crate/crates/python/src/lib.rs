//! Python bindings: `import pygasc`.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use gasc_core::adapters;
use gasc_core::corpus::{self, Corpus, Filter};
use gasc_core::geoform::{self, GeoProblem};
use gasc_core::runner::{self, Results, RunConfig, RunOptions, TimingMode};
use gasc_core::scoring;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn os_err(e: impl std::fmt::Display) -> PyErr {
    PyOSError::new_err(e.to_string())
}

/// Parses JSON text into Python objects.
fn to_py<'py>(py: Python<'py>, json: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (json,))
}

/// A geometry problem: construction plus conjecture.
#[pyclass(module = "pygasc", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct Problem {
    inner: GeoProblem,
}

#[pymethods]
impl Problem {
    #[staticmethod]
    #[pyo3(signature = (text, fallback_id = None))]
    fn from_gclc(text: &str, fallback_id: Option<&str>) -> PyResult<Self> {
        let p = match fallback_id {
            Some(id) => geoform::parse_gclc_with_id(text, id),
            None => geoform::parse_gclc(text),
        };
        p.map(|inner| Problem { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_exchange(text: &str) -> PyResult<Self> {
        geoform::read_exchange_str(text).map(|inner| Problem { inner }).map_err(value_err)
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id.to_string()
    }

    fn to_gclc(&self) -> String {
        geoform::emit_gclc(&self.inner)
    }

    fn to_exchange(&self) -> String {
        geoform::write_exchange_string(&self.inner)
    }

    fn to_ggb(&self) -> String {
        geoform::emit_ggb_script(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Problem({})", self.inner.id)
    }
}

/// "good", "fair" or "poor".
#[pyfunction]
fn classify_validation_time(seconds: f64) -> PyResult<String> {
    let class = scoring::classify_validation_time(seconds).map_err(value_err)?;
    Ok(serde_json::to_value(class).map_err(value_err)?.as_str().unwrap_or_default().to_string())
}

#[pyfunction]
fn de_bruijn_factor(informal_size: usize, formal_size: usize) -> PyResult<f64> {
    scoring::de_bruijn_factor(informal_size, formal_size).map_err(value_err)
}

/// Validation report as a dict.
#[pyfunction]
fn validate_corpus<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let report = corpus::validate_corpus(&path).map_err(os_err)?;
    to_py(py, &serde_json::to_string(&report).map_err(value_err)?)
}

/// Sorted ids of the selected problems.
#[pyfunction]
#[pyo3(signature = (path, axiom_systems = Vec::new(), conjecture_types = Vec::new(), ids = Vec::new()))]
fn select_problems(
    path: PathBuf,
    axiom_systems: Vec<String>,
    conjecture_types: Vec<String>,
    ids: Vec<String>,
) -> PyResult<Vec<String>> {
    let corpus = Corpus::load(&path).map_err(os_err)?;
    let filter = Filter {
        axiom_systems: axiom_systems.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(value_err)?,
        conjecture_types: conjecture_types.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(value_err)?,
        ids,
    };
    Ok(corpus.select(&filter).map_err(value_err)?.iter().map(|e| e.id().to_string()).collect())
}

/// Verdict name for the output of the named adapter.
#[pyfunction]
#[pyo3(signature = (adapters_path, adapter, output, exit_code = None))]
fn classify_output(adapters_path: PathBuf, adapter: &str, output: &str, exit_code: Option<i32>) -> PyResult<String> {
    let specs = adapters::load_adapters(&adapters_path).map_err(value_err)?;
    let spec = specs
        .iter()
        .find(|s| s.name == adapter)
        .ok_or_else(|| PyValueError::new_err(format!("no adapter named {adapter}")))?;
    Ok(adapters::classify_output(spec, output, exit_code).to_string())
}

/// Runs a competition and returns the results as a dict.
#[pyfunction]
#[pyo3(signature = (corpus, adapters, out_dir, wall_limit_s = 10.0, workers = 4, timing_mode = "serial", repetitions = 1, search_dirs = Vec::new()))]
#[allow(clippy::too_many_arguments)]
fn run_competition<'py>(
    py: Python<'py>,
    corpus: PathBuf,
    adapters: PathBuf,
    out_dir: PathBuf,
    wall_limit_s: f64,
    workers: usize,
    timing_mode: &str,
    repetitions: u32,
    search_dirs: Vec<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = Corpus::load(&corpus).map_err(os_err)?;
    let specs = adapters::load_adapters(&adapters).map_err(value_err)?;
    let timing_mode: TimingMode = timing_mode.parse().map_err(value_err)?;
    let config = RunConfig { wall_limit_s, cpu_limit_s: wall_limit_s, workers, timing_mode, repetitions, ..RunConfig::default() };
    let options = RunOptions { keep_workdirs: false, search_dirs };
    let selection: Vec<_> = c.entries().iter().collect();
    let results = py
        .detach(|| runner::run_competition(&c, &selection, &specs, &config, &out_dir, &options))
        .map_err(os_err)?;
    to_py(py, &results.to_canonical_json())
}

/// Rebuilds results from an event log.
#[pyfunction]
fn replay_log<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let results = runner::replay_log(&path).map_err(os_err)?;
    to_py(py, &results.to_canonical_json())
}

/// Ranking of a run directory (or results file) as a dict.
#[pyfunction]
#[pyo3(signature = (results, corpus = None))]
fn score<'py>(py: Python<'py>, results: PathBuf, corpus: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let r = Results::load(&results).map_err(os_err)?;
    let c = corpus.as_deref().map(Corpus::load).transpose().map_err(os_err)?;
    let run_dir = if results.is_dir() { results.clone() } else { results.parent().unwrap_or(Path::new(".")).to_path_buf() };
    let (_, ranking) = scoring::score_results(&r, c.as_ref(), Some(&run_dir)).map_err(value_err)?;
    to_py(py, &ranking.to_canonical_json())
}

#[pymodule]
fn pygasc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Problem>()?;
    m.add_function(wrap_pyfunction!(classify_validation_time, m)?)?;
    m.add_function(wrap_pyfunction!(de_bruijn_factor, m)?)?;
    m.add_function(wrap_pyfunction!(validate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(select_problems, m)?)?;
    m.add_function(wrap_pyfunction!(classify_output, m)?)?;
    m.add_function(wrap_pyfunction!(run_competition, m)?)?;
    m.add_function(wrap_pyfunction!(replay_log, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    Ok(())
}
