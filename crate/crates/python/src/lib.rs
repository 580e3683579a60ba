//! Python bindings: `import ldp_hull`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ldp_hull::montecarlo::{self, Mode};
use ldp_hull::oracle::{self, OracleOptions};
use ldp_hull::solver::{self, CandidateKind};
use ldp_hull::{hull, io, legendre, levelset, Mat2, Model1D, Orientation, PolygonalLine, RateOptions, Tau, Vec2};

create_exception!(ldp_hull, LdpHullError, PyValueError);

fn err(e: ldp_hull::Error) -> PyErr {
    LdpHullError::new_err(format!("{}: {e}", e.kind()))
}

fn vec2(p: (f64, f64)) -> Vec2 {
    Vec2::new(p.0, p.1)
}

fn pair(v: Vec2) -> (f64, f64) {
    (v.x, v.y)
}

fn pairs(vs: &[Vec2]) -> Vec<(f64, f64)> {
    vs.iter().map(|v| pair(*v)).collect()
}

fn orientation(s: &str) -> PyResult<Orientation> {
    match s {
        "ccw" => Ok(Orientation::Counterclockwise),
        "cw" => Ok(Orientation::Clockwise),
        _ => Err(PyValueError::new_err("orientation must be 'ccw' or 'cw'")),
    }
}

/// Law of one increment of the walk.
#[pyclass(name = "IncrementModel", frozen, skip_from_py_object, module = "ldp_hull")]
#[derive(Clone)]
struct PyModel {
    inner: ldp_hull::IncrementModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn gaussian(mean: (f64, f64), cov: ((f64, f64), (f64, f64))) -> PyResult<Self> {
        let m = Mat2::new(cov.0 .0, cov.0 .1, cov.1 .0, cov.1 .1);
        ldp_hull::IncrementModel::gaussian(vec2(mean), m).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn atoms(points: Vec<(f64, f64)>, probs: Vec<f64>) -> PyResult<Self> {
        ldp_hull::IncrementModel::atoms(points.into_iter().map(vec2).collect(), probs).map(|inner| Self { inner }).map_err(err)
    }

    /// Steps `(mu1, Y)` with `Y` given by atoms.
    #[staticmethod]
    fn graph1d_atoms(mu1: f64, points: Vec<f64>, probs: Vec<f64>) -> PyResult<Self> {
        let y = Model1D::atoms(points, probs).map_err(err)?;
        ldp_hull::IncrementModel::graph1d(mu1, y).map(|inner| Self { inner }).map_err(err)
    }

    /// Steps `(mu1, Y)` with `Y ~ N(mean, var)`.
    #[staticmethod]
    fn graph1d_gaussian(mu1: f64, mean: f64, var: f64) -> PyResult<Self> {
        let y = Model1D::gaussian(mean, var).map_err(err)?;
        ldp_hull::IncrementModel::graph1d(mu1, y).map(|inner| Self { inner }).map_err(err)
    }

    /// Parse the JSON distribution format used by the command line.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = io::parse_dist(text).map_err(err)?;
        spec.to_model().map(|inner| Self { inner }).map_err(err)
    }

    fn regularize(&self, eps: f64) -> PyResult<Self> {
        self.inner.regularize(eps).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.epsilon()
    }

    #[getter]
    fn drift(&self) -> (f64, f64) {
        pair(self.inner.drift())
    }

    #[getter]
    fn support_class(&self) -> String {
        match self.inner.support_class() {
            ldp_hull::SupportClass::FullPlane => "full_plane".into(),
            ldp_hull::SupportClass::VerticalLine(_) => "vertical_line".into(),
            ldp_hull::SupportClass::ProperSubsetOfPlane => "proper_subset".into(),
        }
    }

    fn is_centrally_symmetric(&self) -> bool {
        self.inner.is_centrally_symmetric()
    }

    fn cumulant(&self, u: (f64, f64)) -> f64 {
        self.inner.cumulant(vec2(u))
    }

    fn cumulant_gradient(&self, u: (f64, f64)) -> (f64, f64) {
        pair(self.inner.cumulant_gradient(vec2(u)))
    }

    /// `I(v)`; `inf` outside the domain.
    fn rate(&self, v: (f64, f64)) -> PyResult<f64> {
        legendre::rate_general(&self.inner, vec2(v)).map_err(err)
    }

    fn rate_gradient(&self, v: (f64, f64)) -> PyResult<(f64, f64)> {
        legendre::rate_gradient(&self.inner, vec2(v)).map(pair).map_err(err)
    }

    fn a_max(&self) -> f64 {
        solver::a_max(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("IncrementModel({:?}, eps={})", self.inner.kind(), self.inner.epsilon())
    }
}

/// One curve satisfying the optimality conditions.
#[pyclass(name = "Candidate", frozen, module = "ldp_hull")]
struct PyCandidate {
    inner: solver::Candidate,
}

#[pymethods]
impl PyCandidate {
    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind {
            CandidateKind::Level { .. } => "level",
            CandidateKind::Graph { .. } => "graph",
        }
    }

    #[getter]
    fn alpha(&self) -> Option<f64> {
        match self.inner.kind {
            CandidateKind::Level { alpha, .. } => Some(alpha),
            CandidateKind::Graph { .. } => None,
        }
    }

    #[getter]
    fn ell(&self) -> Option<(f64, f64)> {
        match self.inner.kind {
            CandidateKind::Level { ell, .. } => Some(pair(ell)),
            CandidateKind::Graph { .. } => None,
        }
    }

    #[getter]
    fn tau(&self) -> &'static str {
        self.inner.tau.symbol()
    }

    #[getter]
    fn multiplier(&self) -> f64 {
        self.inner.multiplier
    }

    #[getter]
    fn energy(&self) -> f64 {
        self.inner.energy
    }

    #[getter]
    fn hull_area(&self) -> f64 {
        self.inner.hull_area
    }

    #[getter]
    fn minimal(&self) -> bool {
        self.inner.minimal
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.trajectory.times.clone()
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        pairs(&self.inner.trajectory.points)
    }

    #[getter]
    fn derivs(&self) -> Vec<(f64, f64)> {
        pairs(&self.inner.trajectory.derivs)
    }

    fn __repr__(&self) -> String {
        format!("Candidate(kind={}, tau={}, energy={}, minimal={})", self.kind(), self.tau(), self.inner.energy, self.inner.minimal)
    }
}

#[pyclass(name = "RateResult", frozen, module = "ldp_hull")]
struct PyRateResult {
    inner: solver::RateResult,
}

#[pymethods]
impl PyRateResult {
    #[getter]
    fn a(&self) -> f64 {
        self.inner.a
    }

    #[getter]
    fn j_a(&self) -> f64 {
        self.inner.j_a
    }

    #[getter]
    fn a_max(&self) -> f64 {
        self.inner.a_max
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps
    }

    #[getter]
    fn symmetric(&self) -> bool {
        self.inner.symmetric
    }

    #[getter]
    fn candidates(&self) -> Vec<PyCandidate> {
        self.inner.candidates.iter().map(|c| PyCandidate { inner: c.clone() }).collect()
    }

    fn __repr__(&self) -> String {
        format!("RateResult(a={}, j_a={}, candidates={})", self.inner.a, self.inner.j_a, self.inner.candidates.len())
    }
}

/// The minimal path cost among curves with hull area `a`, with all candidate curves.
#[pyfunction]
#[pyo3(signature = (model, a, directions = 256, samples = 1024, eps = 0.0))]
fn rate_of_area(py: Python<'_>, model: &PyModel, a: f64, directions: usize, samples: usize, eps: f64) -> PyResult<PyRateResult> {
    let opts = RateOptions { directions, samples, eps };
    let m = model.inner.clone();
    py.detach(move || solver::rate_of_area(&m, a, &opts)).map(|inner| PyRateResult { inner }).map_err(err)
}

#[pyfunction]
fn hull_area(points: Vec<(f64, f64)>) -> f64 {
    let pts: Vec<Vec2> = points.into_iter().map(vec2).collect();
    hull::hull_area_points(&pts)
}

/// Reorder the edges of a polygonal line by angle.
#[pyfunction]
#[pyo3(signature = (points, orientation = "ccw"))]
fn convexify(points: Vec<(f64, f64)>, orientation: &str) -> PyResult<Vec<(f64, f64)>> {
    let line = PolygonalLine::new(points.into_iter().map(vec2).collect()).map_err(err)?;
    Ok(pairs(line.convexify(self::orientation(orientation)?).vertices()))
}

/// Vertices of the traced level set `K = alpha`.
#[pyfunction]
#[pyo3(signature = (model, alpha, m = 2048))]
fn trace_level(model: &PyModel, alpha: f64, m: usize) -> PyResult<Vec<(f64, f64)>> {
    levelset::trace_level(&model.inner, alpha, m).map(|p| pairs(p.vertices())).map_err(err)
}

/// `(times, g, g')` of the arc of `K = alpha` from `r ell` to `-r ell` on side `tau`.
#[pyfunction]
#[pyo3(signature = (model, alpha, ell, tau, n = 1024))]
fn arc_parametrization(model: &PyModel, alpha: f64, ell: (f64, f64), tau: &str, n: usize) -> PyResult<(Vec<f64>, Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let tau: Tau = tau.parse().map_err(err)?;
    let arc = levelset::arc_parametrization(&model.inner, alpha, vec2(ell), tau, n).map_err(err)?;
    Ok((arc.times, pairs(&arc.samples), pairs(&arc.derivs)))
}

/// Brute-force minimization over curves with `n` constant-velocity segments.
#[pyfunction]
#[pyo3(signature = (model, a, n = 128))]
fn minimize_discrete<'py>(py: Python<'py>, model: &PyModel, a: f64, n: usize) -> PyResult<Bound<'py, PyDict>> {
    let m = model.inner.clone();
    let curve = py.detach(move || oracle::minimize_discrete(&m, a, n, &OracleOptions::default())).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("energy", curve.energy)?;
    d.set_item("signed_area", curve.area)?;
    d.set_item("hull_area", curve.hull_area())?;
    d.set_item("points", pairs(&curve.points()))?;
    Ok(d)
}

/// Monte Carlo estimate of `-(1/n) log P(A_n >= a n^2)`.
#[pyfunction]
#[pyo3(signature = (model, a, n, samples = 100_000, mode = "tilted", seed = 0))]
fn estimate_ldp<'py>(py: Python<'py>, model: &PyModel, a: f64, n: usize, samples: usize, mode: &str, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let mode: Mode = mode.parse().map_err(err)?;
    let m = model.inner.clone();
    let e = py.detach(move || montecarlo::estimate_ldp(&m, a, n, samples, mode, seed, &RateOptions::default())).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rate_estimate", e.rate_estimate)?;
    d.set_item("stderr", e.stderr)?;
    d.set_item("probability", e.probability)?;
    d.set_item("probability_stderr", e.probability_stderr)?;
    d.set_item("hits", e.hits)?;
    d.set_item("samples", e.samples)?;
    Ok(d)
}

/// One simulated walk `S_0 = 0, ..., S_n`.
#[pyfunction]
#[pyo3(signature = (model, n, seed = 0))]
fn simulate_walk(model: &PyModel, n: usize, seed: u64) -> Vec<(f64, f64)> {
    pairs(&montecarlo::simulate_walk(&model.inner, n, seed).points)
}

#[pymodule]
#[pyo3(name = "ldp_hull")]
fn ldp_hull_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LdpHullError", m.py().get_type::<LdpHullError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyCandidate>()?;
    m.add_class::<PyRateResult>()?;
    m.add_function(wrap_pyfunction!(rate_of_area, m)?)?;
    m.add_function(wrap_pyfunction!(hull_area, m)?)?;
    m.add_function(wrap_pyfunction!(convexify, m)?)?;
    m.add_function(wrap_pyfunction!(trace_level, m)?)?;
    m.add_function(wrap_pyfunction!(arc_parametrization, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_discrete, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_ldp, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_walk, m)?)?;
    Ok(())
}
