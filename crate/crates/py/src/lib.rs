//! Python bindings for `mhd-core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use mhd_core::besov::{besov_norm, besov_report, BesovIndex};
use mhd_core::calibrate::{calibrate_constants, small_data_pairs, standard_corpus, CalibrationSettings, CorpusEntry};
use mhd_core::dyadic::FilterBank;
use mhd_core::fields::{leray_project, sample_divergence_free, SpectralField};
use mhd_core::heat::{free_evolution_at, heat_propagate};
use mhd_core::lifespan::{lifespan_estimate, Branch, LifespanReport};
use mhd_core::osgood::{comparison_ode, gronwall_bound, inverse_bound, log_display_bound, log_osgood_bound, OsgoodModulus};
use mhd_core::solver::{continuous_dependence_experiment, solve_mhd, SolverConfig, SolverState};
use mhd_core::{snapshot, Grid, MhdError};

fn err(e: MhdError) -> PyErr {
    match e {
        MhdError::Io(_) | MhdError::Format(_) | MhdError::NonFinite(_) | MhdError::NotConverging(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// A Fourier-space field on the periodic torus.
#[pyclass(name = "Field", module = "mhd_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyField {
    inner: SpectralField,
}

#[pymethods]
impl PyField {
    /// Seeded divergence-free vector field with spectral decay `|k|^-decay`.
    #[staticmethod]
    #[pyo3(signature = (n, seed, decay = 2.0, dim = 2))]
    fn sample(n: usize, seed: u64, decay: f64, dim: usize) -> PyResult<Self> {
        let g = Grid::periodic(dim, n).map_err(err)?;
        Ok(Self { inner: sample_divergence_free(&g, seed, decay).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, components = 2, dim = 2))]
    fn zeros(n: usize, components: usize, dim: usize) -> PyResult<Self> {
        let g = Grid::periodic(dim, n).map_err(err)?;
        Ok(Self { inner: SpectralField::zeros(&g, components, true) })
    }

    /// Builds a field from physical-space samples, one flat row-major list per component.
    #[staticmethod]
    #[pyo3(signature = (n, values, dim = 2))]
    fn from_physical(n: usize, values: Vec<Vec<f64>>, dim: usize) -> PyResult<Self> {
        let g = Grid::periodic(dim, n).map_err(err)?;
        Ok(Self { inner: SpectralField::from_physical(&g, &values).map_err(err)? })
    }

    fn to_physical(&self) -> Vec<Vec<f64>> {
        self.inner.to_physical()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.grid().n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.grid().dim()
    }

    #[getter]
    fn components(&self) -> usize {
        self.inner.components()
    }

    fn scaled(&self, factor: f64) -> Self {
        Self { inner: self.inner.scaled(factor) }
    }

    fn __add__(&self, other: &PyField) -> PyResult<Self> {
        Ok(Self { inner: self.inner.add(&other.inner).map_err(err)? })
    }

    fn __sub__(&self, other: &PyField) -> PyResult<Self> {
        Ok(Self { inner: self.inner.sub(&other.inner).map_err(err)? })
    }

    fn __mul__(&self, factor: f64) -> Self {
        self.scaled(factor)
    }

    fn __eq__(&self, other: &PyField) -> bool {
        self.inner == other.inner
    }

    /// Spectral L² norm (equal to the normalized physical L² norm).
    fn l2(&self) -> f64 {
        self.inner.spectral_l2()
    }

    fn max_divergence(&self) -> PyResult<f64> {
        mhd_core::fields::divergence_bound(&self.inner).map_err(err)
    }

    fn leray(&self) -> PyResult<Self> {
        Ok(Self { inner: leray_project(&self.inner).map_err(err)? })
    }

    fn heat(&self, t: f64) -> PyResult<Self> {
        Ok(Self { inner: heat_propagate(&self.inner, t).map_err(err)? })
    }

    fn __repr__(&self) -> String {
        let g = self.inner.grid();
        format!("Field(n={}, dim={}, components={})", g.n(), g.dim(), self.inner.components())
    }
}

/// Littlewood-Paley filters on a fixed grid.
#[pyclass(name = "FilterBank", module = "mhd_py")]
pub struct PyFilterBank {
    inner: FilterBank,
}

#[pymethods]
impl PyFilterBank {
    #[new]
    #[pyo3(signature = (n, dim = 2))]
    fn new(n: usize, dim: usize) -> PyResult<Self> {
        let g = Grid::periodic(dim, n).map_err(err)?;
        Ok(Self { inner: FilterBank::new(&g).map_err(err)? })
    }

    /// `(j_min, j_max)`.
    #[getter]
    fn band(&self) -> (i32, i32) {
        (self.inner.j_min(), self.inner.j_max())
    }

    fn phi(&self, j: i32, k: f64) -> f64 {
        self.inner.phi_at(j, k)
    }

    fn partition_deviation(&self) -> f64 {
        self.inner.partition_deviation()
    }

    fn block(&self, f: &PyField, j: i32) -> PyResult<PyField> {
        Ok(PyField { inner: self.inner.lp_block(&f.inner, j).map_err(err)? })
    }

    fn low_cutoff(&self, f: &PyField, j: i32) -> PyResult<PyField> {
        Ok(PyField { inner: self.inner.low_cutoff(&f.inner, j).map_err(err)? })
    }

    #[pyo3(signature = (f, s, p = 2.0, r = 1.0))]
    fn besov_norm(&self, f: &PyField, s: f64, p: f64, r: f64) -> PyResult<f64> {
        besov_norm(&f.inner, BesovIndex::new(s, p, r).map_err(err)?, &self.inner).map_err(err)
    }

    /// Besov norm with the truncation diagnostics, as JSON.
    #[pyo3(signature = (f, s, p = 2.0, r = 1.0))]
    fn besov_report(&self, f: &PyField, s: f64, p: f64, r: f64) -> PyResult<String> {
        to_json(&besov_report(&f.inner, BesovIndex::new(s, p, r).map_err(err)?, &self.inner).map_err(err)?)
    }

    /// `(L¹_T Ḃ^{d/p+1}, L²_T Ḃ^{d/p})` norms of the free heat evolution of `u0`.
    #[pyo3(signature = (u0, t_end, p = 2.0))]
    fn free_evolution(&self, u0: &PyField, t_end: f64, p: f64) -> PyResult<(f64, f64)> {
        let fe = free_evolution_at(&u0.inner, t_end, p, &self.inner).map_err(err)?;
        Ok((fe.l1, fe.l2))
    }
}

#[pyclass(name = "LifespanReport", module = "mhd_py", get_all)]
pub struct PyLifespanReport {
    e0: f64,
    u0_norm: f64,
    b0_norm: f64,
    /// `"small_data"` or `"large_data"`.
    branch: String,
    a: f64,
    j0: Option<i32>,
    t0: f64,
    t1: Option<f64>,
    t2: Option<f64>,
    t: f64,
    json: String,
}

impl PyLifespanReport {
    fn from_report(r: &LifespanReport) -> PyResult<Self> {
        Ok(Self {
            e0: r.e0,
            u0_norm: r.u0_norm,
            b0_norm: r.b0_norm,
            branch: match r.branch {
                Branch::SmallData => "small_data",
                Branch::LargeData => "large_data",
            }
            .to_string(),
            a: r.constants.a,
            j0: r.j0,
            t0: r.t0,
            t1: r.t1,
            t2: r.t2,
            t: r.t,
            json: to_json(r)?,
        })
    }
}

#[pymethods]
impl PyLifespanReport {
    fn __repr__(&self) -> String {
        format!("LifespanReport(branch={}, E0={:e}, T={:e})", self.branch, self.e0, self.t)
    }
}

#[pyfunction]
#[pyo3(signature = (u0, b0, c1 = 1.0, c2 = 1.0, p = 2.0))]
fn lifespan(u0: &PyField, b0: &PyField, c1: f64, c2: f64, p: f64) -> PyResult<PyLifespanReport> {
    let bank = FilterBank::new(u0.inner.grid()).map_err(err)?;
    PyLifespanReport::from_report(&lifespan_estimate(&u0.inner, &b0.inner, c1, c2, p, &bank).map_err(err)?)
}

#[pyclass(name = "Solution", module = "mhd_py")]
pub struct PySolution {
    state: SolverState,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn converged(&self) -> bool {
        self.state.converged
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.state.history.len().saturating_sub(1)
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.state.times.clone()
    }

    /// Picard distances between consecutive iterates.
    #[getter]
    fn distances(&self) -> Vec<f64> {
        self.state.history.iter().filter_map(|r| r.distance.map(|d| d.total)).collect()
    }

    #[getter]
    fn bounds_hold(&self) -> bool {
        self.state.all_energy_bounds() && self.state.all_dissipation_bounds()
    }

    fn u(&self, node: usize) -> PyResult<PyField> {
        self.state
            .u
            .get(node)
            .map(|f| PyField { inner: f.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("node {node} out of range")))
    }

    fn b(&self, node: usize) -> PyResult<PyField> {
        self.state
            .b
            .get(node)
            .map(|f| PyField { inner: f.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("node {node} out of range")))
    }

    /// A named norm trace of the final iterate.
    fn trace(&self, name: &str) -> PyResult<Vec<f64>> {
        self.state
            .traces
            .last()
            .and_then(|t| t.series(name))
            .map(<[f64]>::to_vec)
            .ok_or_else(|| PyValueError::new_err(format!("unknown trace `{name}`")))
    }

    /// Iteration history as JSON.
    fn history_json(&self) -> PyResult<String> {
        to_json(&self.state.history)
    }
}

#[allow(clippy::too_many_arguments)]
fn config(t_end: f64, dt: f64, p: f64, tol: f64, max_picard: usize, c1: f64, c2: f64, override_lifespan: bool) -> SolverConfig {
    let mut cfg = SolverConfig::new(t_end, dt);
    cfg.p = p;
    cfg.tol = tol;
    cfg.max_picard = max_picard;
    cfg.c1 = c1;
    cfg.c2 = c2;
    cfg.override_lifespan = override_lifespan;
    cfg
}

#[pyfunction]
#[pyo3(signature = (u0, b0, t_end, dt, p = 2.0, tol = 1e-8, max_picard = 25, c1 = 1.0, c2 = 1.0, override_lifespan = false))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    u0: &PyField,
    b0: &PyField,
    t_end: f64,
    dt: f64,
    p: f64,
    tol: f64,
    max_picard: usize,
    c1: f64,
    c2: f64,
    override_lifespan: bool,
) -> PyResult<PySolution> {
    let cfg = config(t_end, dt, p, tol, max_picard, c1, c2, override_lifespan);
    let (u, b) = (u0.inner.clone(), b0.inner.clone());
    let state = py
        .detach(move || {
            let bank = FilterBank::new(u.grid())?;
            solve_mhd(&u, &b, &cfg, &bank)
        })
        .map_err(err)?;
    Ok(PySolution { state })
}

/// Continuous-dependence table as JSON.
#[pyfunction]
#[pyo3(signature = (u0, b0, eps, dt, seed = 9, p = 2.0, c1 = 1.0, c2 = 1.0))]
#[allow(clippy::too_many_arguments)]
fn continuous_dependence(py: Python<'_>, u0: &PyField, b0: &PyField, eps: Vec<f64>, dt: f64, seed: u64, p: f64, c1: f64, c2: f64) -> PyResult<String> {
    let cfg = config(1.0, dt, p, 1e-8, 25, c1, c2, false);
    let (u, b) = (u0.inner.clone(), b0.inner.clone());
    let table = py
        .detach(move || {
            let bank = FilterBank::new(u.grid())?;
            continuous_dependence_experiment(&u, &b, &eps, seed, &cfg, &bank)
        })
        .map_err(err)?;
    to_json(&table)
}

/// Seeded small-data pairs `(u0, b0)` of the given critical size.
#[pyfunction]
#[pyo3(signature = (n, seed, count = 1, size = 0.01, p = 2.0, dim = 2))]
fn small_data(n: usize, seed: u64, count: usize, size: f64, p: f64, dim: usize) -> PyResult<Vec<(PyField, PyField)>> {
    let g = Grid::periodic(dim, n).map_err(err)?;
    let bank = FilterBank::new(&g).map_err(err)?;
    Ok(small_data_pairs(seed, count, size, p, &bank)
        .map_err(err)?
        .into_iter()
        .map(|(u, b)| (PyField { inner: u }, PyField { inner: b }))
        .collect())
}

/// Divergence-free field scaled to `norm` in `Ḃ^{d/p + shift}_{p,1}`.
#[pyfunction]
#[pyo3(signature = (n, seed, norm, shift = -1.0, decay = 3.0, p = 2.0, dim = 2))]
fn corpus_field(n: usize, seed: u64, norm: f64, shift: f64, decay: f64, p: f64, dim: usize) -> PyResult<PyField> {
    let g = Grid::periodic(dim, n).map_err(err)?;
    let bank = FilterBank::new(&g).map_err(err)?;
    let f = CorpusEntry { seed, decay, norm, shift }.realize(p, &bank).map_err(err)?;
    Ok(PyField { inner: f })
}

/// Suggested `(C1, C2)` over the standard corpus, as JSON.
#[pyfunction]
#[pyo3(signature = (n, seed = 1, count = 10, t_end = 0.5, dt = 0.01))]
fn calibrate(py: Python<'_>, n: usize, seed: u64, count: usize, t_end: f64, dt: f64) -> PyResult<String> {
    let report = py
        .detach(move || {
            let g = Grid::periodic(2, n)?;
            let bank = FilterBank::new(&g)?;
            let settings = CalibrationSettings { t_end, dt, ..Default::default() };
            calibrate_constants(&standard_corpus(seed, count, 1.0, -1.0), &settings, &bank)
        })
        .map_err(err)?;
    to_json(&report)
}

#[pyfunction]
fn gronwall(rho0: f64, gamma_int: f64) -> PyResult<f64> {
    gronwall_bound(rho0, gamma_int).map_err(err)
}

/// Bounds for the modulus `r ln(e + c/r)`: `kind` is `"inverse"`, `"display"` or `"closed_form"`.
#[pyfunction]
#[pyo3(signature = (rho0, gamma_int, c, kind = "inverse", a = 1.0))]
fn log_osgood(rho0: f64, gamma_int: f64, c: f64, kind: &str, a: f64) -> PyResult<f64> {
    match kind {
        "inverse" => inverse_bound(rho0, gamma_int, &OsgoodModulus::logarithmic(c, a).map_err(err)?).map_err(err),
        "display" => log_display_bound(rho0, gamma_int, c).map_err(err),
        "closed_form" => log_osgood_bound(rho0, gamma_int, c).map_err(err),
        other => Err(PyValueError::new_err(format!("unknown bound kind `{other}`"))),
    }
}

/// Final value of `ρ' = γ μ(ρ)` over unit time with constant `γ = gamma_int`;
/// `c = None` selects the linear modulus.
#[pyfunction]
#[pyo3(signature = (rho0, gamma_int, c = None, steps = 2000, a = 1.0))]
fn comparison(rho0: f64, gamma_int: f64, c: Option<f64>, steps: usize, a: f64) -> PyResult<f64> {
    let m = match c {
        Some(c) => OsgoodModulus::logarithmic(c, a),
        None => OsgoodModulus::linear(a),
    }
    .map_err(err)?;
    let path = comparison_ode(rho0, &[(1.0, gamma_int)], &m, steps).map_err(err)?;
    Ok(path.last().map(|x| x.2).unwrap_or(rho0))
}

#[pyfunction]
fn save_fields(path: &str, fields: Vec<PyRef<'_, PyField>>) -> PyResult<()> {
    let refs: Vec<&SpectralField> = fields.iter().map(|f| &f.inner).collect();
    snapshot::save(path, &refs).map_err(err)
}

#[pyfunction]
fn load_fields(path: &str) -> PyResult<Vec<PyField>> {
    Ok(snapshot::load(path).map_err(err)?.into_iter().map(|inner| PyField { inner }).collect())
}

#[pymodule]
fn mhd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyFilterBank>()?;
    m.add_class::<PyLifespanReport>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(lifespan, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(continuous_dependence, m)?)?;
    m.add_function(wrap_pyfunction!(small_data, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_field, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(gronwall, m)?)?;
    m.add_function(wrap_pyfunction!(log_osgood, m)?)?;
    m.add_function(wrap_pyfunction!(comparison, m)?)?;
    m.add_function(wrap_pyfunction!(save_fields, m)?)?;
    m.add_function(wrap_pyfunction!(load_fields, m)?)?;
    Ok(())
}
