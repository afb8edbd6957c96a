//! Python bindings for the `andre` solver.

#![allow(clippy::too_many_arguments)]

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use andre::export;
use andre::net::DenseNet1H;
use andre::optimizer::{incremental_schedule as schedule, train, TrainConfig};
use andre::problems::{self, rk4_solve, IvpProblem};
use andre::report::{run_with, RunOptions, RunReport};
use andre::refine::AdamSolver;
use andre::sweep::{sweep as run_sweep, SweepOptions, SweepParam};
use andre::{make_grid, AndreConfig, Ansatz, ScnfModel};

fn to_py(err: andre::Error) -> PyErr {
    match err {
        andre::Error::Io { .. } | andre::Error::Csv { .. } | andre::Error::Json { .. } => {
            PyIOError::new_err(err.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_ansatz(s: &str) -> PyResult<Ansatz> {
    s.parse::<Ansatz>().map_err(to_py)
}

#[pyclass(module = "andre_py", name = "Problem", skip_from_py_object, frozen)]
#[derive(Clone)]
struct PyProblem {
    inner: IvpProblem,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (name, t_end = None, kappa0 = None))]
    fn new(name: &str, t_end: Option<f64>, kappa0: Option<f64>) -> PyResult<Self> {
        let base = match (name, kappa0) {
            ("ivp4", Some(k)) => problems::ivp4_with_kappa0(k),
            (_, Some(_)) => return Err(PyValueError::new_err("kappa0 only applies to ivp4")),
            (n, None) => problems::by_name(n).map_err(to_py)?,
        };
        let inner = match t_end {
            Some(t) => base.with_t_end(t).map_err(to_py)?,
            None => base,
        };
        Ok(Self { inner })
    }

    #[staticmethod]
    fn names() -> Vec<&'static str> {
        problems::PROBLEM_NAMES.to_vec()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn description(&self) -> String {
        self.inner.description().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn domain(&self) -> (f64, f64) {
        (self.inner.t_start(), self.inner.t_end())
    }

    #[getter]
    fn initial(&self) -> Vec<f64> {
        self.inner.initial().to_vec()
    }

    fn residual(&self, t: f64, u: Vec<f64>, du: Vec<f64>) -> PyResult<Vec<f64>> {
        let o = self.inner.dim();
        if u.len() != o || du.len() != o {
            return Err(PyValueError::new_err(format!("expected vectors of length {o}")));
        }
        Ok(self.inner.residual(t, &u, &du))
    }

    fn rhs(&self, t: f64, u: Vec<f64>) -> PyResult<Vec<f64>> {
        if u.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!("expected a vector of length {}", self.inner.dim())));
        }
        Ok(self.inner.rhs(t, &u))
    }

    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.inner.exact(t)
    }

    /// Fixed-step RK4 trajectory as `(times, values)`.
    fn rk4(&self, steps: usize) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let traj = rk4_solve(&self.inner, steps).map_err(to_py)?;
        Ok((traj.times, traj.values))
    }

    fn __repr__(&self) -> String {
        format!("Problem('{}', domain=({}, {}))", self.inner.name(), self.inner.t_start(), self.inner.t_end())
    }
}

#[pyclass(module = "andre_py", name = "Network", skip_from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: DenseNet1H,
}

#[pymethods]
impl PyNetwork {
    #[new]
    fn new(hidden: usize) -> Self {
        Self {
            inner: DenseNet1H::zeros(hidden),
        }
    }

    /// Builds a network from weights in the order ν, η, ρ, γ.
    #[staticmethod]
    fn from_weights(weights: Vec<f64>) -> PyResult<Self> {
        if weights.len() < 4 || !(weights.len() - 1).is_multiple_of(3) {
            return Err(PyValueError::new_err("weight count must be 3H + 1 with H >= 1"));
        }
        Ok(Self {
            inner: DenseNet1H::from_flat(&weights),
        })
    }

    #[getter]
    fn hidden(&self) -> usize {
        self.inner.hidden_count()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.to_flat()
    }

    fn forward(&self, t: f64) -> f64 {
        self.inner.forward(t)
    }

    fn forward_dt(&self, t: f64) -> f64 {
        self.inner.forward_dt(t)
    }

    fn grad_value(&self, t: f64) -> Vec<f64> {
        self.inner.grad_value_weights(t).as_slice().to_vec()
    }

    fn grad_dt(&self, t: f64) -> Vec<f64> {
        self.inner.grad_dt_weights(t).as_slice().to_vec()
    }
}

#[pyclass(module = "andre_py", name = "Model", skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: ScnfModel,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (initial, t0, t_right, order = 5, hidden = 5, ansatz = "hard"))]
    fn new(initial: Vec<f64>, t0: f64, t_right: f64, order: usize, hidden: usize, ansatz: &str) -> PyResult<Self> {
        if initial.is_empty() || order < 1 || hidden < 1 {
            return Err(PyValueError::new_err("need a non-empty initial value, order >= 1 and hidden >= 1"));
        }
        Ok(Self {
            inner: ScnfModel::zeros(parse_ansatz(ansatz)?, order, hidden, initial, t0, t_right),
        })
    }

    #[getter]
    fn weight_count(&self) -> usize {
        self.inner.weight_count()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights_flat()
    }

    fn set_weights(&mut self, weights: Vec<f64>) -> PyResult<()> {
        if weights.len() != self.inner.weight_count() {
            return Err(PyValueError::new_err(format!("expected {} weights", self.inner.weight_count())));
        }
        self.inner.set_weights(&weights);
        Ok(())
    }

    fn trial_value(&self, t: f64) -> Vec<f64> {
        self.inner.trial_value(t)
    }

    fn trial_dt(&self, t: f64) -> Vec<f64> {
        self.inner.trial_dt(t)
    }

    fn cost(&self, problem: &PyProblem, points: Vec<f64>) -> PyResult<f64> {
        self.inner.cost(&problem.inner, &points).map_err(to_py)
    }

    fn cost_gradient(&self, problem: &PyProblem, points: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.cost_gradient(&problem.inner, &points).map_err(to_py)
    }

    /// Trains on the model's own interval and returns the final training error.
    #[pyo3(signature = (problem, epochs = 100_000, increments = 5, learning_rate = 1e-3, n_tp = 9, n_vp = 11))]
    fn train(
        &mut self,
        py: Python<'_>,
        problem: &PyProblem,
        epochs: usize,
        increments: usize,
        learning_rate: f64,
        n_tp: usize,
        n_vp: usize,
    ) -> PyResult<f64> {
        let grid = make_grid(self.inner.t0(), self.inner.t_right(), n_tp, n_vp).map_err(to_py)?;
        let cfg = TrainConfig {
            epochs,
            increments,
            learning_rate,
            ..TrainConfig::default()
        };
        let model = self.inner.clone();
        let p = problem.inner.clone();
        let out = py.detach(move || train(model, &p, &grid, &cfg)).map_err(to_py)?;
        self.inner = out.model;
        Ok(out.training_error)
    }
}

#[pyclass(module = "andre_py", name = "Config", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: AndreConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (
        problem = None, *, sigma = None, delta = None, epochs = None, increments = None,
        order = None, n_tp = None, n_vp = None, ansatz = None, hidden = None,
        neuron_cap = None, min_size = None, ladder = None, warm_start = None
    ))]
    fn new(
        problem: Option<&PyProblem>,
        sigma: Option<f64>,
        delta: Option<f64>,
        epochs: Option<usize>,
        increments: Option<usize>,
        order: Option<usize>,
        n_tp: Option<usize>,
        n_vp: Option<usize>,
        ansatz: Option<&str>,
        hidden: Option<usize>,
        neuron_cap: Option<usize>,
        min_size: Option<f64>,
        ladder: Option<Vec<f64>>,
        warm_start: Option<bool>,
    ) -> PyResult<Self> {
        let mut c = problem.map(|p| AndreConfig::for_problem(&p.inner)).unwrap_or_default();
        if let Some(v) = sigma {
            c.sigma = v;
        }
        if let Some(v) = delta {
            c.delta = v;
        }
        if let Some(v) = epochs {
            c.train.epochs = v;
        }
        if let Some(v) = increments {
            c.train.increments = v;
        }
        if let Some(v) = order {
            c.order = v;
        }
        if let Some(v) = n_tp {
            c.n_tp = v;
        }
        if let Some(v) = n_vp {
            c.n_vp = v;
        }
        if let Some(v) = ansatz {
            c.ansatz = parse_ansatz(v)?;
        }
        if let Some(v) = hidden {
            c.base_hidden = v;
        }
        if let Some(v) = neuron_cap {
            c.neuron_cap = v;
        }
        if let Some(v) = min_size {
            c.min_subdomain_size = v;
        }
        if let Some(v) = ladder {
            c.learning_rate_ladder = v;
        }
        if let Some(v) = warm_start {
            c.warm_start = v;
        }
        c.validate().map_err(to_py)?;
        Ok(Self { inner: c })
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn epochs(&self) -> usize {
        self.inner.train.epochs
    }

    #[getter]
    fn increments(&self) -> usize {
        self.inner.train.increments
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner)
    }
}

#[pyclass(module = "andre_py", name = "Report", frozen)]
struct PyReport {
    inner: RunReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn completed(&self) -> bool {
        self.inner.is_completed()
    }

    #[getter]
    fn status<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.status)
    }

    #[getter]
    fn h(&self) -> usize {
        self.inner.aggregates.h
    }

    #[getter]
    fn l1(&self) -> Option<f64> {
        self.inner.aggregates.l1
    }

    #[getter]
    fn linf(&self) -> Option<f64> {
        self.inner.aggregates.linf
    }

    #[getter]
    fn boundaries(&self) -> Vec<f64> {
        self.inner.boundaries.clone()
    }

    #[getter]
    fn subdomains<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.subdomains)
    }

    #[getter]
    fn attempts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.attempts)
    }

    #[getter]
    fn aggregates<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.aggregates)
    }

    /// Piecewise trial solution at `t`, or None outside the verified subdomains.
    fn evaluate(&self, t: f64) -> Option<Vec<f64>> {
        self.inner.evaluate(t)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Writes summary.json and the CSV tables into `out_dir`.
    fn export(&self, out_dir: PathBuf) -> PyResult<Vec<PathBuf>> {
        export::write_all(&self.inner, &out_dir).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: export::read_summary(&path).map_err(to_py)?,
        })
    }
}

#[pyfunction]
#[pyo3(signature = (problem, config = None, verification_metrics = false))]
fn solve(py: Python<'_>, problem: &PyProblem, config: Option<&PyConfig>, verification_metrics: bool) -> PyResult<PyReport> {
    let cfg = config
        .map(|c| c.inner.clone())
        .unwrap_or_else(|| AndreConfig::for_problem(&problem.inner));
    let p = problem.inner.clone();
    let options = RunOptions { verification_metrics };
    let report = py
        .detach(move || run_with(&p, &cfg, &options, &mut AdamSolver))
        .map_err(to_py)?;
    Ok(PyReport { inner: report })
}

#[pyfunction]
#[pyo3(signature = (problem, param, values, config = None, threads = None, out_dir = None))]
fn sweep<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    param: &str,
    values: Vec<f64>,
    config: Option<&PyConfig>,
    threads: Option<usize>,
    out_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    if values.is_empty() {
        return Err(PyValueError::new_err("values must be non-empty"));
    }
    let param: SweepParam = param.parse().map_err(to_py)?;
    let cfg = config
        .map(|c| c.inner.clone())
        .unwrap_or_else(|| AndreConfig::for_problem(&problem.inner));
    let p = problem.inner.clone();
    let options = SweepOptions { threads, out_dir };
    let table = py
        .detach(move || run_sweep(&p, &cfg, param, &values, &options))
        .map_err(to_py)?;
    json_to_py(py, &table.rows)
}

#[pyfunction]
fn incremental_schedule(n_points: usize, increments: usize) -> PyResult<Vec<usize>> {
    schedule(n_points, increments).map_err(to_py)
}

#[pymodule]
fn andre_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(incremental_schedule, m)?)?;
    Ok(())
}
