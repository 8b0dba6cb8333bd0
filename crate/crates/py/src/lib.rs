//! Python bindings. The module is importable as `fwcut`.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use ::fwcut as core;
use core::harness::{run_maxagree_on, run_maxkcut_on, RunConfig, RunKind, RunReport};
use core::sampler::{fw_gaussian, Problem, SampleSet, SolverOptions};

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "WeightedGraph", module = "fwcut", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyWeightedGraph {
    pub inner: core::WeightedGraph,
}

#[pymethods]
impl PyWeightedGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        core::WeightedGraph::new(n, edges)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Parse GSet text (`n m` header, 1-based `i j w` lines).
    #[staticmethod]
    fn from_gset(text: &str) -> PyResult<Self> {
        core::parse_gset(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn to_gset(&self) -> String {
        self.inner.to_gset()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().iter().map(|e| (e.i, e.j, e.w)).collect()
    }

    fn laplacian_quadratic(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.n() {
            return Err(PyValueError::new_err("vector length must equal n"));
        }
        Ok(self.inner.laplacian_quadratic(&x))
    }

    fn __repr__(&self) -> String {
        format!(
            "WeightedGraph(n={}, edges={})",
            self.inner.n(),
            self.inner.num_edges()
        )
    }
}

#[pyclass(name = "SignedGraph", module = "fwcut", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySignedGraph {
    pub inner: core::SignedGraph,
}

#[pymethods]
impl PySignedGraph {
    #[new]
    fn new(
        n: usize,
        plus: Vec<(usize, usize, f64)>,
        minus: Vec<(usize, usize, f64)>,
    ) -> PyResult<Self> {
        core::SignedGraph::new(n, plus, minus)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Label each edge of `g` by its Jaccard score.
    #[staticmethod]
    #[pyo3(signature = (g, delta = 0.05))]
    fn from_jaccard(g: &PyWeightedGraph, delta: f64) -> PyResult<Self> {
        core::jaccard_signed_graph(&g.inner, delta)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (text, n = None))]
    fn from_jsonl(text: &str, n: Option<usize>) -> PyResult<Self> {
        core::SignedGraph::from_jsonl(text, n)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    fn to_jsonl(&self) -> String {
        self.inner.to_jsonl()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn plus_edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner
            .plus_edges()
            .iter()
            .map(|e| (e.i, e.j, e.w))
            .collect()
    }

    fn minus_edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner
            .minus_edges()
            .iter()
            .map(|e| (e.i, e.j, e.w))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "SignedGraph(n={}, plus={}, minus={})",
            self.inner.n(),
            self.inner.plus_edges().len(),
            self.inner.minus_edges().len()
        )
    }
}

/// Raw solver output: samples of `N(0, X̂)` and the constrained entries of `X̂`.
#[pyclass(name = "SolveResult", module = "fwcut", frozen, get_all)]
pub struct PySolveResult {
    pub samples: Vec<Vec<f64>>,
    pub diag: Vec<f64>,
    pub edge_values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub infeasibility: f64,
    pub objective: f64,
    pub final_gap: f64,
    pub peak_words: usize,
}

#[pyclass(name = "RunReport", module = "fwcut", frozen)]
pub struct PyRunReport {
    inner: RunReport,
}

#[pymethods]
impl PyRunReport {
    #[getter]
    fn dataset(&self) -> &str {
        &self.inner.dataset
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }
    #[getter]
    fn infeas(&self) -> f64 {
        self.inner.infeas
    }
    #[getter]
    fn sdp_value(&self) -> f64 {
        self.inner.sdp_value
    }
    #[getter]
    fn best_value(&self) -> f64 {
        self.inner.best_value
    }
    #[getter]
    fn ar(&self) -> f64 {
        self.inner.ar
    }
    #[getter]
    fn memory_words(&self) -> usize {
        self.inner.memory_words
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn to_json(&self) -> PyResult<String> {
        core::harness::reports_to_json(std::slice::from_ref(&self.inner)).map_err(to_py)
    }

    fn to_csv(&self) -> PyResult<String> {
        core::harness::reports_to_csv(std::slice::from_ref(&self.inner)).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunReport(dataset={:?}, iterations={}, sdp_value={:.4}, best_value={:.4}, AR={:.4})",
            self.inner.dataset,
            self.inner.iterations,
            self.inner.sdp_value,
            self.inner.best_value,
            self.inner.ar
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn config(
    kind: RunKind,
    k: usize,
    eps: f64,
    reps: usize,
    seed: u64,
    max_iters: usize,
    eta: f64,
    tau: Option<f64>,
) -> RunConfig {
    let mut c = RunConfig::new(kind);
    c.k = k;
    c.eps = eps;
    c.reps = reps;
    c.seed = seed;
    c.max_iters = max_iters;
    c.eta = eta;
    c.tau = tau;
    c
}

/// Full Max-k-Cut pipeline: solve, repair, best of `reps` FJ roundings.
#[pyfunction]
#[pyo3(signature = (g, k = 2, eps = 0.05, reps = 10, seed = 0, max_iters = 2_000_000, eta = 0.5, tau = None))]
#[allow(clippy::too_many_arguments)]
fn solve_maxkcut(
    py: Python<'_>,
    g: &PyWeightedGraph,
    k: usize,
    eps: f64,
    reps: usize,
    seed: u64,
    max_iters: usize,
    eta: f64,
    tau: Option<f64>,
) -> PyResult<PyRunReport> {
    let cfg = config(RunKind::MaxKCut, k, eps, reps, seed, max_iters, eta, tau);
    let g = g.inner.clone();
    py.detach(move || run_maxkcut_on(&g, &cfg))
        .map(|inner| PyRunReport { inner })
        .map_err(to_py)
}

/// Full Max-Agree pipeline with sign-pattern rounding.
#[pyfunction]
#[pyo3(signature = (sg, eps = 0.05, reps = 10, seed = 0, max_iters = 2_000_000, eta = 0.5))]
fn solve_maxagree(
    py: Python<'_>,
    sg: &PySignedGraph,
    eps: f64,
    reps: usize,
    seed: u64,
    max_iters: usize,
    eta: f64,
) -> PyResult<PyRunReport> {
    let cfg = config(RunKind::MaxAgree, 2, eps, reps, seed, max_iters, eta, None);
    let sg = sg.inner.clone();
    py.detach(move || run_maxagree_on(&sg, &cfg))
        .map(|inner| PyRunReport { inner })
        .map_err(to_py)
}

/// Run the Frank–Wolfe solver alone on a Max-k-Cut instance.
#[pyfunction]
#[pyo3(signature = (g, k = 2, eps = 0.05, samples = 2, seed = 0, max_iters = 2_000_000, eta = 0.5))]
#[allow(clippy::too_many_arguments)]
fn fw_maxkcut(
    py: Python<'_>,
    g: &PyWeightedGraph,
    k: usize,
    eps: f64,
    samples: usize,
    seed: u64,
    max_iters: usize,
    eta: f64,
) -> PyResult<PySolveResult> {
    let g = g.inner.clone();
    let out = py
        .detach(move || {
            let p = Problem::max_k_cut(&g, k, eps, eta)?;
            let opts = SolverOptions {
                samples,
                max_iters,
                seed,
                ..Default::default()
            };
            fw_gaussian(&p, &opts)
        })
        .map_err(to_py)?;
    Ok(PySolveResult {
        samples: out.samples.iter().map(<[f64]>::to_vec).collect(),
        diag: out.image.diag,
        edge_values: out.image.edges,
        iterations: out.stats.iterations,
        converged: out.stats.converged,
        infeasibility: out.stats.infeasibility,
        objective: out.stats.objective,
        final_gap: out.stats.final_gap,
        peak_words: out.stats.peak_words,
    })
}

/// Log-sum-exp penalty `φ_M(u, v)`.
#[pyfunction]
fn phi(u: Vec<f64>, v: Vec<f64>, m: f64) -> PyResult<f64> {
    core::phi(&u, &v, m).map_err(to_py)
}

#[pyfunction]
fn phi_gradient(u: Vec<f64>, v: Vec<f64>, m: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    core::phi_gradient(&u, &v, m).map_err(to_py)
}

fn sample_set(samples: Vec<Vec<f64>>) -> PyResult<SampleSet> {
    SampleSet::from_samples(samples).map_err(to_py)
}

/// Frieze–Jerrum labels from `k` sample vectors.
#[pyfunction]
fn fj_round(samples: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
    Ok(core::fj_round(&sample_set(samples)?).0)
}

/// Sign-pattern cluster labels from 2 or 3 sample vectors.
#[pyfunction]
fn sign_pattern_round(samples: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
    Ok(core::sign_pattern_round(&sample_set(samples)?).0)
}

fn check_labels(n: usize, labels: &[usize]) -> PyResult<()> {
    if labels.len() != n {
        return Err(PyValueError::new_err(format!(
            "expected {n} labels, got {}",
            labels.len()
        )));
    }
    Ok(())
}

#[pyfunction]
fn cut_value(g: &PyWeightedGraph, labels: Vec<usize>) -> PyResult<f64> {
    check_labels(g.inner.n(), &labels)?;
    Ok(core::cut_value(&g.inner, &core::Partition(labels)))
}

#[pyfunction]
fn agree_value(sg: &PySignedGraph, labels: Vec<usize>) -> PyResult<f64> {
    check_labels(sg.inner.n(), &labels)?;
    Ok(core::agree_value(&sg.inner, &core::Clustering(labels)))
}

#[pyfunction]
fn brute_force_maxkcut(g: &PyWeightedGraph, k: usize) -> PyResult<(f64, Vec<usize>)> {
    core::brute_force_maxkcut(&g.inner, k)
        .map(|(v, p)| (v, p.0))
        .map_err(to_py)
}

#[pyfunction]
fn brute_force_maxagree(sg: &PySignedGraph) -> PyResult<(f64, Vec<usize>)> {
    core::brute_force_maxagree(&sg.inner)
        .map(|(v, c)| (v, c.0))
        .map_err(to_py)
}

/// Monte Carlo Frieze–Jerrum constant `α_k` (cached per `k`).
#[pyfunction]
fn alpha_k(py: Python<'_>, k: usize) -> PyResult<f64> {
    py.detach(|| core::alpha_k(k)).map_err(to_py)
}

/// Sparsify an edge list to roughly `4 n ln(n) / τ²` edges.
#[pyfunction]
#[pyo3(signature = (n, edges, tau, seed = 0))]
fn sparsify(
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    tau: f64,
    seed: u64,
) -> PyResult<PyWeightedGraph> {
    core::sparsify_stream(n, tau, seed, edges)
        .map(|inner| PyWeightedGraph { inner })
        .map_err(to_py)
}

#[pymodule]
#[pyo3(name = "fwcut")]
fn fwcut_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Add every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWeightedGraph>()?;
    m.add_class::<PySignedGraph>()?;
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyRunReport>()?;
    m.add_function(wrap_pyfunction!(solve_maxkcut, m)?)?;
    m.add_function(wrap_pyfunction!(solve_maxagree, m)?)?;
    m.add_function(wrap_pyfunction!(fw_maxkcut, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(phi_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(fj_round, m)?)?;
    m.add_function(wrap_pyfunction!(sign_pattern_round, m)?)?;
    m.add_function(wrap_pyfunction!(cut_value, m)?)?;
    m.add_function(wrap_pyfunction!(agree_value, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_maxkcut, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_maxagree, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_k, m)?)?;
    m.add_function(wrap_pyfunction!(sparsify, m)?)?;
    Ok(())
}
