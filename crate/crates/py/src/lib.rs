//! Python bindings for `distal-core`.
//!
//! Logit pairs cross the boundary as `(start, end)` tuples of float lists;
//! enum-valued options take the same names as the command line
//! (`"cubic"`, `"lc_cluster"`, `"paper_literal"`, ...).

use std::collections::HashMap;

use distal_core::active::{self, EmbeddingRecord, EmbeddingTable, PredictionRecord, StrategyConfig};
use distal_core::align::{self, Token, TokenSequence};
use distal_core::loss::{self, DistillConfig, GoldSpan, SpanLogits};
use distal_core::{metrics, qa_data, resample as rs, stats};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

pyo3::create_exception!(distal, DistalError, PyValueError, "Raised for invalid input to a distal operation.");

fn err(e: distal_core::Error) -> PyErr {
    DistalError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = distal_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

type Pair = (Vec<f64>, Vec<f64>);

fn span(pair: Pair) -> PyResult<SpanLogits> {
    SpanLogits::new(pair.0, pair.1).map_err(err)
}

fn gold(g: (usize, usize)) -> PyResult<GoldSpan> {
    GoldSpan::new(g.0, g.1).map_err(err)
}

fn records(predictions: HashMap<String, Vec<f64>>) -> PyResult<HashMap<String, PredictionRecord>> {
    predictions
        .into_iter()
        .map(|(id, probs)| {
            let rec = PredictionRecord::from_probs(id.as_str(), &probs).map_err(err)?;
            Ok((id, rec))
        })
        .collect()
}

#[pyfunction]
fn normalize_answer(text: &str) -> String {
    qa_data::normalize_answer(text)
}

#[pyfunction]
fn exact_match(prediction: &str, golds: Vec<String>) -> PyResult<u8> {
    metrics::exact_match(prediction, &golds).map_err(err)
}

#[pyfunction]
fn f1(prediction: &str, golds: Vec<String>) -> PyResult<f64> {
    metrics::f1(prediction, &golds).map_err(err)
}

/// Scores `{id: answer}` against a SQuAD v1.1 file; returns
/// `{"exact_match", "f1", "count"}` with EM and F1 in percent.
#[pyfunction]
#[pyo3(signature = (dataset_path, predictions, strict = false))]
fn evaluate<'py>(
    py: Python<'py>,
    dataset_path: &str,
    predictions: HashMap<String, String>,
    strict: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let dataset = qa_data::load_squad(dataset_path).map_err(err)?;
    let policy = if strict { metrics::MissingPolicy::Strict } else { metrics::MissingPolicy::Lenient };
    let report = metrics::evaluate(&dataset, &predictions, policy).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("exact_match", report.exact_match)?;
    out.set_item("f1", report.f1)?;
    out.set_item("count", report.count)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (text, continuation = false))]
fn normalize_token(text: &str, continuation: bool) -> String {
    align::normalize_token(&Token {
        text: text.to_string(),
        is_continuation: continuation,
    })
}

/// Student-to-teacher token map.
#[pyclass(module = "distal", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct Alignment {
    mapping: Vec<usize>,
    leader: Vec<bool>,
    teacher_len: usize,
}

impl From<&Alignment> for align::AlignmentMap {
    fn from(a: &Alignment) -> Self {
        align::AlignmentMap {
            mapping: a.mapping.clone(),
            leader: a.leader.clone(),
            teacher_len: a.teacher_len,
        }
    }
}

#[pymethods]
impl Alignment {
    /// `[((s0, s1), (t0, t1)), ...]` half-open ranges of matched groups.
    fn groups(&self) -> Vec<((usize, usize), (usize, usize))> {
        align::AlignmentMap::from(self)
            .groups()
            .into_iter()
            .map(|(s, t)| ((s.start, s.end), (t.start, t.end)))
            .collect()
    }

    /// Teacher logits gathered at student positions.
    fn project(&self, teacher: Pair) -> PyResult<Pair> {
        let out = align::project_teacher_logits(&self.into(), &span(teacher)?).map_err(err)?;
        Ok((out.start().to_vec(), out.end().to_vec()))
    }

    fn __len__(&self) -> usize {
        self.mapping.len()
    }

    fn __repr__(&self) -> String {
        format!("Alignment(mapping={:?}, teacher_len={})", self.mapping, self.teacher_len)
    }
}

/// Aligns plain student words onto WordPiece teacher tokens (`##` marks
/// continuations).
#[pyfunction]
fn align_tokens(student: Vec<String>, teacher: Vec<String>) -> PyResult<Alignment> {
    let s = TokenSequence::student(&student).map_err(err)?;
    let t = TokenSequence::teacher(&teacher).map_err(err)?;
    let map = align::align(&s, &t).map_err(|e| err(e.into()))?;
    Ok(Alignment {
        mapping: map.mapping,
        leader: map.leader,
        teacher_len: map.teacher_len,
    })
}

#[pyfunction]
#[pyo3(signature = (values, target_len, method = "cubic"))]
fn resample(values: Vec<f64>, target_len: usize, method: &str) -> PyResult<Vec<f64>> {
    rs::resample(&values, target_len, parse(method)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (values, temperature = 1.0))]
fn tempered_softmax(values: Vec<f64>, temperature: f64) -> PyResult<Vec<f64>> {
    loss::tempered_softmax(&values, temperature).map_err(err)
}

#[pyfunction]
fn hard_loss(student: Pair, gold_span: (usize, usize)) -> PyResult<f64> {
    loss::hard_loss(&span(student)?, gold(gold_span)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (student, teacher, temperature = loss::DEFAULT_TEMPERATURE))]
fn soft_loss(student: Pair, teacher: Pair, temperature: f64) -> PyResult<f64> {
    loss::soft_loss(&span(student)?, &span(teacher)?, temperature).map_err(err)
}

#[pyfunction]
fn mse(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    loss::mse(&a, &b).map_err(err)
}

/// Returns `{"hard", "soft", "mse", "total"}`.
#[pyfunction]
#[pyo3(signature = (
    student, teacher_aligned, teacher_full, gold_span, *,
    rho = loss::DEFAULT_RHO, temperature = loss::DEFAULT_TEMPERATURE, mse_weight = 1.0,
    use_interpolation = false, method = "cubic", direction = "student_to_teacher", interpolated_soft = false,
))]
#[allow(clippy::too_many_arguments)]
fn combined_loss<'py>(
    py: Python<'py>,
    student: Pair,
    teacher_aligned: Pair,
    teacher_full: Pair,
    gold_span: (usize, usize),
    rho: f64,
    temperature: f64,
    mse_weight: f64,
    use_interpolation: bool,
    method: &str,
    direction: &str,
    interpolated_soft: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = DistillConfig {
        rho,
        temperature,
        mse_weight,
        use_interpolation,
        method: parse(method)?,
        direction: parse(direction)?,
        interpolated_soft,
    };
    let l = loss::combined_loss(
        &span(student)?,
        &span(teacher_aligned)?,
        &span(teacher_full)?,
        gold(gold_span)?,
        &cfg,
    )
    .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("hard", l.hard)?;
    out.set_item("soft", l.soft)?;
    out.set_item("mse", l.mse)?;
    out.set_item("total", l.total)?;
    Ok(out)
}

#[pyfunction]
fn score_least_confidence(probs: Vec<f64>) -> PyResult<f64> {
    Ok(active::score_least_confidence(&PredictionRecord::from_probs("", &probs).map_err(err)?))
}

#[pyfunction]
fn score_margin(probs: Vec<f64>) -> PyResult<f64> {
    active::score_margin(&PredictionRecord::from_probs("", &probs).map_err(err)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (probs, top_n = 5, renormalize = false))]
fn score_entropy(probs: Vec<f64>, top_n: usize, renormalize: bool) -> PyResult<f64> {
    active::score_entropy(&PredictionRecord::from_probs("", &probs).map_err(err)?, top_n, renormalize).map_err(err)
}

/// Labeled / unlabeled partition of question ids.
#[pyclass(module = "distal")]
struct Pool {
    inner: active::Pool,
}

#[pymethods]
impl Pool {
    #[new]
    fn new(ids: Vec<String>) -> PyResult<Self> {
        Ok(Pool {
            inner: active::Pool::new(ids).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: active::Pool = serde_json::from_str(text).map_err(|e| DistalError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(Pool { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("pool serializes")
    }

    #[getter]
    fn cycle(&self) -> usize {
        self.inner.cycle
    }

    #[getter]
    fn labeled(&self) -> Vec<String> {
        self.inner.labeled.iter().cloned().collect()
    }

    #[getter]
    fn unlabeled(&self) -> Vec<String> {
        self.inner.unlabeled.iter().cloned().collect()
    }

    fn label(&mut self, ids: Vec<String>) -> PyResult<()> {
        self.inner.label(&ids).map_err(err)
    }

    /// Picks up to `budget` unlabeled ids. `predictions` maps id to candidate
    /// probabilities; `embeddings` (id to vector) is needed by `lc_cluster`.
    #[pyo3(signature = (
        predictions, budget, strategy = "lc", *, seed = 0, top_n = 5, k_clusters = 10, oversample = 3,
        margin_mode = "paper_literal", renormalize_entropy = false, strict = false, embeddings = None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn select(
        &self,
        predictions: HashMap<String, Vec<f64>>,
        budget: usize,
        strategy: &str,
        seed: u64,
        top_n: usize,
        k_clusters: usize,
        oversample: usize,
        margin_mode: &str,
        renormalize_entropy: bool,
        strict: bool,
        embeddings: Option<HashMap<String, Vec<f64>>>,
    ) -> PyResult<Vec<String>> {
        let cfg = StrategyConfig {
            strategy: parse(strategy)?,
            top_n,
            k_clusters,
            oversample_factor: oversample,
            margin_mode: parse(margin_mode)?,
            renormalize_entropy,
            seed,
            lenient: !strict,
            ..Default::default()
        };
        let table = match embeddings {
            Some(map) => {
                let mut rows: Vec<_> = map.into_iter().map(|(id, vec)| EmbeddingRecord { id, vec }).collect();
                rows.sort_by(|a, b| a.id.cmp(&b.id));
                Some(EmbeddingTable::new(rows).map_err(err)?)
            }
            None => None,
        };
        let sel = active::select(&self.inner, &records(predictions)?, &cfg, budget, table.as_ref()).map_err(err)?;
        Ok(sel.ids)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Pool(cycle={}, labeled={}, unlabeled={})",
            self.inner.cycle,
            self.inner.labeled.len(),
            self.inner.unlabeled.len()
        )
    }
}

/// Returns `{"assignments", "centroids", "objective", "iterations"}`.
#[pyfunction]
#[pyo3(signature = (points, k, seed = 0, max_iter = 100, tol = 1e-9))]
fn kmeans<'py>(
    py: Python<'py>,
    points: Vec<Vec<f64>>,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = active::kmeans(&points, k, seed, max_iter, tol).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("assignments", r.assignments)?;
    out.set_item("centroids", r.centroids)?;
    out.set_item("objective", r.objective)?;
    out.set_item("iterations", r.iterations)?;
    Ok(out)
}

#[pyfunction]
fn largest_remainder(sizes: Vec<usize>, budget: usize) -> PyResult<Vec<usize>> {
    active::largest_remainder(&sizes, budget).map_err(err)
}

/// Returns `{"p_value", "reject", "B", "alpha", "seed", "k", "mean_delta"}`.
#[pyfunction]
#[pyo3(signature = (deltas, resamples = stats::DEFAULT_RESAMPLES, seed = 0, alpha = stats::DEFAULT_ALPHA))]
fn paired_bootstrap<'py>(
    py: Python<'py>,
    deltas: Vec<f64>,
    resamples: usize,
    seed: u64,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let delta = stats::DeltaSample::new(deltas).map_err(err)?;
    let r = stats::paired_bootstrap(&delta, resamples, seed, alpha).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("p_value", r.p_value)?;
    out.set_item("reject", r.reject)?;
    out.set_item("B", r.resamples)?;
    out.set_item("alpha", r.alpha)?;
    out.set_item("seed", r.seed)?;
    out.set_item("k", r.k)?;
    out.set_item("mean_delta", r.mean_delta)?;
    Ok(out)
}

/// Runs the `distal` command line in-process and returns its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("distal".to_string()).chain(args).collect();
    py.detach(|| distal_core::cli::run(argv))
}

#[pymodule]
fn distal(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DistalError", m.py().get_type::<DistalError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Alignment>()?;
    m.add_class::<Pool>()?;
    m.add_function(wrap_pyfunction!(normalize_answer, m)?)?;
    m.add_function(wrap_pyfunction!(exact_match, m)?)?;
    m.add_function(wrap_pyfunction!(f1, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_token, m)?)?;
    m.add_function(wrap_pyfunction!(align_tokens, m)?)?;
    m.add_function(wrap_pyfunction!(resample, m)?)?;
    m.add_function(wrap_pyfunction!(tempered_softmax, m)?)?;
    m.add_function(wrap_pyfunction!(hard_loss, m)?)?;
    m.add_function(wrap_pyfunction!(soft_loss, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(combined_loss, m)?)?;
    m.add_function(wrap_pyfunction!(score_least_confidence, m)?)?;
    m.add_function(wrap_pyfunction!(score_margin, m)?)?;
    m.add_function(wrap_pyfunction!(score_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(largest_remainder, m)?)?;
    m.add_function(wrap_pyfunction!(paired_bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
