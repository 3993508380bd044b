//! Python bindings: scenarios, models, runs, relay traces and the
//! experiment suites. Structured reports are returned as plain dicts.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use hrd::dsl::{builtin_bacteria_model, dump_model, load_model, parse_model, BacteriaParams, ModelSpec};
use hrd::experiments;
use hrd::io::{snapshot_csv, time_series_csv, to_json};
use hrd::relay::{relay_trace as trace, Configuration};
use hrd::scenario::Scenario;
use hrd::solver::{run, RunReport, SolverState};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_obj<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = to_json(value).map_err(value_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn zeta(sign: i64) -> PyResult<Configuration> {
    Configuration::from_sign(sign).ok_or_else(|| value_err(format!("configuration must be +1 or -1, got {sign}")))
}

/// A reaction-diffusion model with relay thresholds and branches.
#[pyclass(name = "Model", module = "hysteresis_rd", frozen)]
struct PyModel {
    inner: ModelSpec,
}

#[pymethods]
impl PyModel {
    /// The built-in bacteria model; keyword arguments override parameters.
    #[staticmethod]
    #[pyo3(signature = (**params))]
    fn bacteria(params: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut p = BacteriaParams::default();
        if let Some(d) = params {
            for (k, v) in d.iter() {
                let key: String = k.extract()?;
                let val: f64 = v.extract()?;
                let slot = match key.as_str() {
                    "d1" => &mut p.d1,
                    "d2" => &mut p.d2,
                    "a" => &mut p.a,
                    "a1" => &mut p.a1,
                    "a2" => &mut p.a2,
                    "a_alpha" => &mut p.a_alpha,
                    "b_alpha" => &mut p.b_alpha,
                    "a_beta" => &mut p.a_beta,
                    "b_beta" => &mut p.b_beta,
                    "lambda" => &mut p.lambda,
                    other => return Err(value_err(format!("unknown bacteria parameter {other}"))),
                };
                *slot = val;
            }
        }
        builtin_bacteria_model(&p).map(|inner| Self { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_model(&path).map(|inner| Self { inner }).map_err(value_err)
    }

    /// Parse a model file given as TOML text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_model(text, "<string>").map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    /// `(k, l, m)`: diffusing, non-diffusing and output dimensions.
    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        (self.inner.k, self.inner.l, self.inner.m)
    }

    fn gamma_alpha(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.thresholds.gamma_alpha(&u).map_err(value_err)
    }

    fn gamma_beta(&self, u: Vec<f64>) -> PyResult<f64> {
        self.inner.thresholds.gamma_beta(&u).map_err(value_err)
    }

    /// Model file text.
    fn dump(&self) -> String {
        dump_model(&self.inner)
    }

    /// Aggregated condition checks as a dict.
    #[pyo3(signature = (sigma = 0.0, samples = 2000))]
    fn validate(&self, py: Python<'_>, sigma: f64, samples: usize) -> PyResult<Py<PyAny>> {
        let summary = py.detach(|| experiments::validate(&self.inner, sigma, samples));
        json_obj(py, &summary)
    }

    /// Relay driven by samples `[(t, [u1..uk]), ...]`; returns `[(t, zeta, [w..]), ...]`.
    #[pyo3(signature = (samples, zeta0 = -1))]
    fn relay_trace(&self, samples: Vec<(f64, Vec<f64>)>, zeta0: i64) -> PyResult<Vec<(f64, i8, Vec<f64>)>> {
        let pts = trace(&self.inner.thresholds, &self.inner.branches, zeta(zeta0)?, &samples).map_err(value_err)?;
        Ok(pts.into_iter().map(|p| (p.t, p.zeta.sign(), p.w)).collect())
    }

    fn __repr__(&self) -> String {
        format!("Model({:?}, k={}, l={}, m={})", self.inner.name, self.inner.k, self.inner.l, self.inner.m)
    }
}

/// A fully specified run: model, initial data, grid, solver settings.
#[pyclass(name = "Scenario", module = "hysteresis_rd")]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn reference() -> Self {
        Self { inner: Scenario::reference() }
    }

    #[staticmethod]
    fn tangency() -> Self {
        Self { inner: Scenario::tangency() }
    }

    #[staticmethod]
    fn smooth() -> Self {
        Self { inner: Scenario::smooth() }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Scenario::load(&path).map(|inner| Self { inner }).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    /// Parse scenario TOML; relative model paths resolve against `base`.
    #[staticmethod]
    #[pyo3(signature = (text, base = None))]
    fn parse(text: &str, base: Option<PathBuf>) -> PyResult<Self> {
        let base = base.unwrap_or_else(|| PathBuf::from("."));
        Scenario::parse(text, "<string>", &base).map(|inner| Self { inner }).map_err(value_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.t_end
    }

    #[setter]
    fn set_t_end(&mut self, t: f64) {
        self.inner.t_end = t;
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.config.dt
    }

    #[getter]
    fn model(&self) -> PyModel {
        PyModel {
            inner: self.inner.model.clone(),
        }
    }

    /// Solver settings as a dict.
    fn config(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_obj(py, &self.inner.config)
    }

    /// Copy with grid and time step refined by `2**level`.
    fn refined(&self, level: u32) -> Self {
        Self {
            inner: self.inner.refined(level),
        }
    }

    fn run(&self, py: Python<'_>) -> PyResult<PyRunResult> {
        let s = &self.inner;
        let (state, report) = py
            .detach(|| s.initial_data().and_then(|init| run(&s.model, &init, s.t_end, &s.config)))
            .map_err(value_err)?;
        Ok(PyRunResult { state, report })
    }

    #[pyo3(signature = (eps = None, seed = 0))]
    fn perturb(&self, py: Python<'_>, eps: Option<Vec<f64>>, seed: u64) -> PyResult<Py<PyAny>> {
        let list = eps.unwrap_or_else(|| self.inner.experiments.perturb_eps.clone());
        let t = py.detach(|| experiments::perturb(&self.inner, &list, seed)).map_err(value_err)?;
        json_obj(py, &t)
    }

    #[pyo3(signature = (levels = None))]
    fn converge(&self, py: Python<'_>, levels: Option<usize>) -> PyResult<Py<PyAny>> {
        let levels = levels.unwrap_or(self.inner.experiments.converge_levels);
        let t = py.detach(|| experiments::converge(&self.inner, levels)).map_err(value_err)?;
        json_obj(py, &t)
    }

    fn compare_solvers(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let r = py.detach(|| experiments::compare_solvers(&self.inner)).map_err(value_err)?;
        json_obj(py, &r)
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?}, n={}, t_end={})", self.inner.name, self.inner.n, self.inner.t_end)
    }
}

/// Final state and per-step report of a run.
#[pyclass(name = "RunResult", module = "hysteresis_rd", frozen)]
struct PyRunResult {
    state: SolverState,
    report: RunReport,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn status(&self) -> &'static str {
        self.report.status.label()
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.report.status.exit_code()
    }

    #[getter]
    fn t_star(&self) -> Option<f64> {
        self.report.status.t_star()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.report.rows.iter().map(|r| r.t).collect()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.report.b_values()
    }

    #[getter]
    fn margins(&self) -> Vec<Option<f64>> {
        self.report.rows.iter().map(|r| r.margin).collect()
    }

    #[getter]
    fn max_abs_drift(&self) -> Vec<f64> {
        self.report.max_abs_drift()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.state.u.grid().points()
    }

    /// Final `u` as a list of component columns.
    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        (0..self.state.u.dim()).map(|c| self.state.u.component(c)).collect()
    }

    #[getter]
    fn v(&self) -> Vec<Vec<f64>> {
        (0..self.state.v.dim()).map(|c| self.state.v.component(c)).collect()
    }

    #[getter]
    fn xi(&self) -> Vec<i8> {
        self.state.xi.iter().map(|z| z.sign()).collect()
    }

    /// Full report as a dict.
    fn report(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        json_obj(py, &self.report)
    }

    fn time_series_csv(&self) -> String {
        time_series_csv(&self.report)
    }

    fn snapshot_csv(&self) -> String {
        snapshot_csv(&self.state)
    }

    fn __repr__(&self) -> String {
        format!("RunResult(status={:?}, steps={})", self.report.status.label(), self.report.rows.len() - 1)
    }
}

#[pymodule]
fn hysteresis_rd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRunResult>()?;
    Ok(())
}
