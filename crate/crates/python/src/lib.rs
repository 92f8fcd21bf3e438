//! Python bindings. Structured results cross the boundary as plain dicts
//! and lists built from their JSON form.

use std::path::PathBuf;

use lyricist_entropy as le;
use le::classifier::{ClassifierConfig, LyricistModel, TrainedModel};
use le::corpus::{CorpusFormat, SongRecord};
use le::entropy::LogBase;
use le::grouping::GroupingMethod;
use le::pipeline::ExperimentConfig;
use le::sampling::ExperimentDataset;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(lyricist_entropy, LyricistEntropyError, PyException);
create_exception!(lyricist_entropy, PluginError, LyricistEntropyError);

fn to_py(e: le::Error) -> PyErr {
    match e {
        le::Error::InvalidParams(m) => PyValueError::new_err(m),
        e if e.is_plugin() => PluginError::new_err(e.to_string()),
        e => LyricistEntropyError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = String>>(s: &str) -> PyResult<T> {
    s.parse().map_err(PyValueError::new_err)
}

fn json_to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| LyricistEntropyError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn json_from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A validated song corpus.
#[pyclass(name = "Corpus", module = "lyricist_entropy", frozen)]
struct PyCorpus {
    inner: le::corpus::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// Reads a `.jsonl` or `.csv` corpus.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let format = CorpusFormat::from_path(&path);
        let inner = le::corpus::load_corpus(&path, format).map_err(to_py)?;
        Ok(PyCorpus { inner })
    }

    /// Builds a corpus from a list of song dicts with `song_id`,
    /// `lyricist_id`, `singer_id` and `lyrics`.
    #[staticmethod]
    fn from_records(py: Python<'_>, records: &Bound<'_, PyAny>) -> PyResult<Self> {
        let songs: Vec<SongRecord> = json_from_py(py, records)?;
        let inner = le::corpus::Corpus::from_songs(songs).map_err(to_py)?;
        Ok(PyCorpus { inner })
    }

    /// The synthetic corpus used by the end-to-end hypothesis check.
    #[staticmethod]
    fn hypothesis(seed: u64) -> Self {
        PyCorpus {
            inner: le::synthesis::generate_hypothesis_corpus(seed),
        }
    }

    /// Generates a corpus from a parameter dict.
    #[staticmethod]
    fn synthesize(py: Python<'_>, params: &Bound<'_, PyAny>) -> PyResult<Self> {
        let params: le::synthesis::SynthParams = json_from_py(py, params)?;
        let inner = le::synthesis::generate_corpus(&params).map_err(to_py)?;
        Ok(PyCorpus { inner })
    }

    fn write_jsonl(&self, path: PathBuf) -> PyResult<()> {
        let file = std::fs::File::create(&path)?;
        le::corpus::write_jsonl(&self.inner, std::io::BufWriter::new(file))?;
        Ok(())
    }

    fn filter_min_songs(&self, min_songs: usize) -> Self {
        PyCorpus {
            inner: le::corpus::filter_min_songs(&self.inner, min_songs),
        }
    }

    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.songs())
    }

    fn lyricists(&self) -> Vec<String> {
        self.inner.lyricists().map(str::to_string).collect()
    }

    #[getter]
    fn n_lyricists(&self) -> usize {
        self.inner.n_lyricists()
    }

    #[getter]
    fn n_singers(&self) -> usize {
        self.inner.n_singers()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus({} songs, {} lyricists, {} singers)",
            self.inner.len(),
            self.inner.n_lyricists(),
            self.inner.n_singers()
        )
    }
}

/// Five entropy groups of lyricists.
#[pyclass(name = "Grouping", module = "lyricist_entropy", frozen)]
struct PyGrouping {
    inner: le::grouping::Grouping,
}

#[pymethods]
impl PyGrouping {
    #[getter]
    fn method(&self) -> String {
        self.inner.method.to_string()
    }

    #[getter]
    fn groups(&self) -> Vec<Vec<String>> {
        self.inner.groups.clone()
    }

    fn sizes(&self) -> Vec<usize> {
        self.inner.sizes()
    }

    fn avg_entropies(&self) -> Vec<f64> {
        self.inner.avg_entropies()
    }

    fn group_of(&self, lyricist_id: &str) -> Option<usize> {
        self.inner.group_of(lyricist_id)
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.stats)
    }

    fn __repr__(&self) -> String {
        format!("Grouping({}, sizes={:?})", self.inner.method, self.inner.sizes())
    }
}

/// Candidate lyricists with their train/validation/test songs.
#[pyclass(name = "Dataset", module = "lyricist_entropy", frozen)]
struct PyDataset {
    inner: ExperimentDataset,
}

#[pymethods]
impl PyDataset {
    #[getter]
    fn dataset_id(&self) -> String {
        self.inner.dataset_id.clone()
    }

    fn candidates(&self) -> Vec<String> {
        self.inner.candidate_ids().into_iter().map(str::to_string).collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyDataset { inner })
    }

    fn __repr__(&self) -> String {
        format!("Dataset({:?}, {} candidates)", self.inner.dataset_id, self.inner.candidates.len())
    }
}

/// A trained TF-IDF plus softmax classifier.
#[pyclass(name = "Model", module = "lyricist_entropy")]
struct PyModel {
    inner: TrainedModel,
}

#[pymethods]
impl PyModel {
    /// Probability of each candidate, in candidate order.
    fn predict(&self, lyrics: &str) -> Vec<f64> {
        self.inner.predict(lyrics)
    }

    fn predict_batch(&mut self, texts: Vec<String>) -> PyResult<Vec<Vec<f64>>> {
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        self.inner.predict_batch(&refs).map_err(to_py)
    }

    #[getter]
    fn candidates(&self) -> Vec<String> {
        self.inner.candidates.clone()
    }

    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.trace)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| LyricistEntropyError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyModel { inner })
    }
}

/// Shannon entropy of a list of counts.
#[pyfunction]
#[pyo3(signature = (counts, base = "natural"))]
fn entropy_of_counts(counts: Vec<usize>, base: &str) -> PyResult<f64> {
    le::entropy::entropy_of_counts(counts, parse::<LogBase>(base)?).map_err(to_py)
}

/// Per-lyricist song counts, singer counts and entropy.
#[pyfunction]
#[pyo3(signature = (corpus, base = "natural"))]
fn lyricist_entropies<'py>(py: Python<'py>, corpus: &PyCorpus, base: &str) -> PyResult<Bound<'py, PyAny>> {
    json_to_py(py, &le::entropy::compute_stats(&corpus.inner, parse(base)?))
}

/// Groups lyricists by entropy. `kmeans` refines the quantile grouping.
#[pyfunction]
#[pyo3(signature = (corpus, method = "quantile", base = "natural", max_iters = 100))]
fn group(corpus: &PyCorpus, method: &str, base: &str, max_iters: usize) -> PyResult<PyGrouping> {
    let stats = le::entropy::compute_stats(&corpus.inner, parse(base)?);
    let quantile = le::grouping::group_quantile(&stats).map_err(to_py)?;
    let inner = match parse::<GroupingMethod>(method)? {
        GroupingMethod::Quantile => quantile,
        GroupingMethod::Kmeans => le::grouping::group_kmeans(&stats, &quantile, max_iters).map_err(to_py)?,
    };
    Ok(PyGrouping { inner })
}

/// Lloyd's algorithm on points from an initial assignment. Returns
/// `(assignment, centroids, objective_trace)`.
#[pyfunction]
#[pyo3(signature = (points, init, k, max_iters = 100))]
fn kmeans_1d(points: Vec<f64>, init: Vec<usize>, k: usize, max_iters: usize) -> PyResult<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let r = le::grouping::kmeans_1d(&points, &init, k, max_iters).map_err(to_py)?;
    Ok((r.assignment, r.centroids, r.objective_trace))
}

/// Ten lyricists from one group, or two from each group when `group` is
/// omitted.
#[pyfunction]
#[pyo3(signature = (corpus, grouping, seed, group = None))]
fn sample(corpus: &PyCorpus, grouping: &PyGrouping, seed: u64, group: Option<usize>) -> PyResult<PyDataset> {
    let inner = match group {
        Some(g) => le::sampling::sample_homogenous(&corpus.inner, &grouping.inner, g, seed),
        None => le::sampling::sample_heterogenous(&corpus.inner, &grouping.inner, seed),
    }
    .map_err(to_py)?;
    Ok(PyDataset { inner })
}

/// Trains the built-in classifier. `config` overrides fields of the
/// default classifier settings.
#[pyfunction]
#[pyo3(signature = (dataset, corpus, config = None))]
fn train(py: Python<'_>, dataset: &PyDataset, corpus: &PyCorpus, config: Option<&Bound<'_, PyAny>>) -> PyResult<PyModel> {
    let config: ClassifierConfig = match config {
        Some(c) => json_from_py(py, c)?,
        None => ClassifierConfig::default(),
    };
    let inner = py
        .detach(|| le::classifier::train(&dataset.inner, &corpus.inner, &config))
        .map_err(to_py)?;
    Ok(PyModel { inner })
}

/// Per-lyricist precision, recall and F1 on the test split.
#[pyfunction]
fn score<'py>(py: Python<'py>, model: &mut PyModel, dataset: &PyDataset, corpus: &PyCorpus) -> PyResult<Bound<'py, PyAny>> {
    let run = le::evaluation::score_run(&mut model.inner, &dataset.inner, &corpus.inner).map_err(to_py)?;
    json_to_py(py, &run)
}

/// `(precision, recall, f1)` from confusion counts, 0/0 taken as 0.
#[pyfunction]
fn metrics(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let m = le::evaluation::metrics(tp, fp, fn_);
    (m.precision, m.recall, m.f1)
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    le::evaluation::pearson(&x, &y).map_err(to_py)
}

#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    le::evaluation::spearman(&x, &y).map_err(to_py)
}

/// Runs the full experiment and writes every artifact to `out_dir`.
/// Returns the correlation summaries and the per-table group metrics.
#[pyfunction]
#[pyo3(signature = (corpus_path, out_dir, config = None, jobs = None))]
fn run_experiment<'py>(
    py: Python<'py>,
    corpus_path: PathBuf,
    out_dir: PathBuf,
    config: Option<&Bound<'py, PyAny>>,
    jobs: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let config: ExperimentConfig = match config {
        Some(c) => json_from_py(py, c)?,
        None => ExperimentConfig::default(),
    };
    let outcome = py
        .detach(|| le::pipeline::run_experiment(&corpus_path, &config, &out_dir, jobs))
        .map_err(to_py)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        tables: std::collections::BTreeMap<String, &'a [le::evaluation::GroupMetrics]>,
        correlations: &'a [le::report::CorrelationSummary],
        datasets: usize,
        failed: usize,
        trained_now: usize,
    }
    let summary = Summary {
        tables: outcome.tables.iter().map(|(k, v)| (k.name(), v.as_slice())).collect(),
        correlations: &outcome.correlations,
        datasets: outcome.manifest.datasets.len(),
        failed: outcome
            .manifest
            .count(|s| matches!(s, le::pipeline::DatasetStatus::Failed { .. })),
        trained_now: outcome.trained_now,
    };
    json_to_py(py, &summary)
}

#[pymodule]
#[pyo3(name = "lyricist_entropy")]
pub fn lyricist_entropy_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LyricistEntropyError", m.py().get_type::<LyricistEntropyError>())?;
    m.add("PluginError", m.py().get_type::<PluginError>())?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyGrouping>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(entropy_of_counts, m)?)?;
    m.add_function(wrap_pyfunction!(lyricist_entropies, m)?)?;
    m.add_function(wrap_pyfunction!(group, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans_1d, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
