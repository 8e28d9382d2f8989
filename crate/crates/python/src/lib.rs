//! Python bindings for `chlab`. Arrays cross the boundary as lists of floats.

use std::path::Path;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use chlab::characteristics;
use chlab::diagnostics;
use chlab::field_solver::{self, SolverSettings};
use chlab::grid::Grid;
use chlab::harness::{self, ScenarioConfig};
use chlab::kernels;
use chlab::measures::{momentum_of_field, GridField};
use chlab::modulation;
use chlab::multipeakon::{self, PeakonState};
use chlab::trajectory;

fn py_err(e: chlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn field(origin: f64, dx: f64, samples: Vec<f64>) -> chlab::Result<GridField> {
    let grid = Grid::new(origin, dx, samples.len())?;
    GridField::new(grid, samples)
}

/// Multipeakon state `(p, q)` at `time`.
#[pyclass(name = "Peakons", module = "chlab_py")]
struct Peakons {
    inner: PeakonState,
}

#[pymethods]
impl Peakons {
    #[new]
    #[pyo3(signature = (p, q, time = 0.0))]
    fn new(p: Vec<f64>, q: Vec<f64>, time: f64) -> PyResult<Self> {
        PeakonState::from_unsorted(p, q, time)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    #[getter]
    fn p(&self) -> Vec<f64> {
        self.inner.p().to_vec()
    }

    #[getter]
    fn q(&self) -> Vec<f64> {
        self.inner.q().to_vec()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Peakons(p={:?}, q={:?}, time={})", self.inner.p(), self.inner.q(), self.inner.time())
    }

    fn hamiltonian(&self) -> f64 {
        multipeakon::hamiltonian(&self.inner)
    }

    /// `(M, E)`.
    fn invariants(&self) -> (f64, f64) {
        multipeakon::exact_invariants(&self.inner)
    }

    /// `(dp, dq)`.
    fn rhs(&self) -> PyResult<(Vec<f64>, Vec<f64>)> {
        multipeakon::rhs(&self.inner).map_err(py_err)
    }

    fn u_at(&self, x: f64) -> f64 {
        self.inner.u_at(x)
    }

    fn asymptotic_speeds(&self) -> PyResult<Vec<f64>> {
        multipeakon::asymptotic_speeds(&self.inner).map_err(py_err)
    }

    #[pyo3(signature = (t_final, dt, stride = 1))]
    fn evolve(&self, t_final: f64, dt: f64, stride: usize) -> PyResult<Vec<Peakons>> {
        multipeakon::evolve_strided(&self.inner, t_final, dt, stride)
            .map(|v| v.into_iter().map(|inner| Peakons { inner }).collect())
            .map_err(py_err)
    }
}

/// Stored snapshots of a field run.
#[pyclass(name = "Trajectory", module = "chlab_py")]
struct Trajectory {
    inner: trajectory::Trajectory,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.grid().nodes()
    }

    #[getter]
    fn is_atomic(&self) -> bool {
        self.inner.is_atomic()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn field(&self, k: usize) -> PyResult<Vec<f64>> {
        if k >= self.inner.len() {
            return Err(py_err(chlab::Error::TimeIndex { index: k, len: self.inner.len() }));
        }
        Ok(self.inner.samples(k).to_vec())
    }

    /// `[(t, M, E, F)]` at every stored step.
    fn invariants(&self) -> Vec<(f64, f64, f64, f64)> {
        diagnostics::invariant_series(&self.inner)
            .into_iter()
            .map(|r| (r.t, r.m, r.e, r.f))
            .collect()
    }

    /// Modulation track as a dict of lists.
    #[pyo3(signature = (n0 = None))]
    fn modulation<'py>(&self, py: Python<'py>, n0: Option<u32>) -> PyResult<Bound<'py, PyDict>> {
        let tr = modulation::track(&self.inner, n0.unwrap_or_else(modulation::default_n0)).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("n0", tr.n0)?;
        d.set_item("t", tr.times)?;
        d.set_item("x", tr.x)?;
        d.set_item("xdot", tr.xdot)?;
        d.set_item("lambda", tr.lambda)?;
        d.set_item("residual", tr.residual)?;
        d.set_item("lost", tr.lost)?;
        Ok(d)
    }

    /// Rightmost jump as a dict of lists.
    #[pyo3(signature = (x_init = 0.0))]
    fn jump<'py>(&self, py: Python<'py>, x_init: f64) -> PyResult<Bound<'py, PyDict>> {
        let jt = characteristics::track_jump(&self.inner, x_init).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("gap", jt.saturation_gap())?;
        d.set_item("t", jt.times)?;
        d.set_item("q_star", jt.q_star)?;
        d.set_item("a", jt.a)?;
        d.set_item("u_at", jt.u_at)?;
        d.set_item("ode_residual", jt.ode_residual)?;
        d.set_item("lost", jt.lost)?;
        Ok(d)
    }

    /// `q(t, x0)` at every stored time.
    fn flow(&self, x0: f64) -> PyResult<Vec<f64>> {
        characteristics::flow(&self.inner, x0).map_err(py_err)
    }
}

/// Evolves nodal data `samples` on the grid `origin + i dx`.
#[pyfunction]
#[pyo3(signature = (origin, dx, samples, t_final, mollifier = None, cfl = 0.5, stride = 1, upwind = false))]
#[allow(clippy::too_many_arguments)]
fn evolve_field(
    origin: f64,
    dx: f64,
    samples: Vec<f64>,
    t_final: f64,
    mollifier: Option<u32>,
    cfl: f64,
    stride: usize,
    upwind: bool,
) -> PyResult<Trajectory> {
    let u0 = field(origin, dx, samples).map_err(py_err)?;
    let mut s = SolverSettings::new(dx, t_final);
    s.mollifier = mollifier;
    s.cfl = cfl;
    s.stride = stride;
    if upwind {
        s.scheme = field_solver::Scheme::Upwind;
    }
    field_solver::evolve_field(&u0, &s)
        .map(|inner| Trajectory { inner })
        .map_err(py_err)
}

#[pyfunction]
fn peakon_profile(c: f64, offset: f64) -> f64 {
    kernels::peakon_profile(c, offset)
}

#[pyfunction]
fn weight_psi(x: f64, order: u32) -> PyResult<f64> {
    kernels::weight_psi(x, order).map_err(py_err)
}

#[pyfunction]
fn helmholtz_solve(f: Vec<f64>, dx: f64) -> PyResult<Vec<f64>> {
    kernels::helmholtz_solve(&f, dx).map_err(py_err)
}

#[pyfunction]
fn green_convolve(f: Vec<f64>, dx: f64) -> PyResult<Vec<f64>> {
    kernels::green_convolve(&f, dx).map_err(py_err)
}

/// Nodal momentum `u - u_xx` with the fitted stencil.
#[pyfunction]
fn momentum(origin: f64, dx: f64, samples: Vec<f64>) -> PyResult<Vec<f64>> {
    let u = field(origin, dx, samples).map_err(py_err)?;
    match momentum_of_field(&u) {
        chlab::measures::MomentumDensity::Sampled(y) => Ok(y.into_samples()),
        chlab::measures::MomentumDensity::Atomic(_) => unreachable!("grid fields have sampled momentum"),
    }
}

#[pyfunction]
#[pyo3(signature = (origin, dx, samples, guess, n0 = None))]
fn locate(origin: f64, dx: f64, samples: Vec<f64>, guess: f64, n0: Option<u32>) -> PyResult<f64> {
    let u = field(origin, dx, samples).map_err(py_err)?;
    modulation::locate(&u, guess, n0.unwrap_or_else(modulation::default_n0)).map_err(py_err)
}

#[pyfunction]
fn default_n0() -> u32 {
    modulation::default_n0()
}

/// `(monotone, min_slope, admissible)`.
#[pyfunction]
fn verify_n0(n0: u32) -> PyResult<(bool, f64, bool)> {
    modulation::verify_n0(n0)
        .map(|r| (r.monotone, r.min_slope, r.admissible()))
        .map_err(py_err)
}

/// Parses `config` text, runs it into `out_dir` and returns
/// `{"passed": bool, "aborted": str | None, "checks": [(name, passed, value, bound)]}`.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, config: &str, out_dir: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ScenarioConfig::parse(config).map_err(py_err)?;
    let report = py
        .detach(|| harness::run_scenario(&cfg, Path::new(out_dir)))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("passed", report.passed())?;
    d.set_item("aborted", report.aborted.clone())?;
    let checks: Vec<(String, bool, f64, f64)> = report
        .checks
        .iter()
        .map(|c| (c.name.clone(), c.passed(), c.value, c.bound))
        .collect();
    d.set_item("checks", checks)?;
    Ok(d)
}

/// `[(name, passed, value, bound)]`.
#[pyfunction]
fn selftest() -> PyResult<Vec<(String, bool, f64, f64)>> {
    harness::selftest()
        .map(|v| v.into_iter().map(|c| (c.name.clone(), c.passed(), c.value, c.bound)).collect())
        .map_err(py_err)
}

#[pymodule]
fn chlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Peakons>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(evolve_field, m)?)?;
    m.add_function(wrap_pyfunction!(peakon_profile, m)?)?;
    m.add_function(wrap_pyfunction!(weight_psi, m)?)?;
    m.add_function(wrap_pyfunction!(helmholtz_solve, m)?)?;
    m.add_function(wrap_pyfunction!(green_convolve, m)?)?;
    m.add_function(wrap_pyfunction!(momentum, m)?)?;
    m.add_function(wrap_pyfunction!(locate, m)?)?;
    m.add_function(wrap_pyfunction!(default_n0, m)?)?;
    m.add_function(wrap_pyfunction!(verify_n0, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
