//! Python bindings for `mtlab`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mtlab::crb::{self, AmplitudeFamily, Crossover, MomentOrder};
use mtlab::estimators::{self, McReport, McSettings, MomentEstimate, Scheme};
use mtlab::experiments::{self, Config, ExperimentConfig};
use mtlab::phase_space::{CovarianceMatrix, FirstMoments, GaussianShape};
use mtlab::sampler::{self, HeterodyneDataset, HomodyneDataset};

fn py_err(e: mtlab::Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

type Mat = ((f64, f64), (f64, f64));

fn mat(g: &CovarianceMatrix) -> Mat {
    ((g.gxx, g.gxp), (g.gxp, g.gpp))
}

/// A single-mode state from one of the supported families.
#[pyclass(name = "StateModel", module = "mtlab_py", frozen)]
struct PyState {
    inner: mtlab::StateModel,
}

fn wrap(r: mtlab::Result<mtlab::StateModel>) -> PyResult<PyState> {
    r.map(|inner| PyState { inner }).map_err(py_err)
}

#[pymethods]
impl PyState {
    #[staticmethod]
    fn vacuum() -> PyState {
        PyState { inner: mtlab::StateModel::vacuum() }
    }

    #[staticmethod]
    fn fock(n: u32) -> PyState {
        PyState { inner: mtlab::StateModel::fock(n) }
    }

    #[staticmethod]
    fn thermal(mu: f64) -> PyResult<PyState> {
        wrap(mtlab::StateModel::thermal(mu))
    }

    #[staticmethod]
    #[pyo3(signature = (lam, phi=0.0))]
    fn squeezed(lam: f64, phi: f64) -> PyResult<PyState> {
        wrap(mtlab::StateModel::squeezed(lam, phi))
    }

    /// Gaussian from first moments and covariance entries.
    #[staticmethod]
    fn gaussian(rx: f64, rp: f64, gxx: f64, gxp: f64, gpp: f64) -> PyResult<PyState> {
        let g = CovarianceMatrix::new(gxx, gxp, gpp).map_err(py_err)?;
        wrap(mtlab::StateModel::gaussian(FirstMoments::new(rx, rp), g))
    }

    /// Gaussian from temperature `mu`, squeezing `lam` and orientation `phi`.
    #[staticmethod]
    #[pyo3(signature = (mu, lam, phi=0.0, rx=0.0, rp=0.0))]
    fn gaussian_shape(mu: f64, lam: f64, phi: f64, rx: f64, rp: f64) -> PyResult<PyState> {
        let shape = GaussianShape::new(mu, lam, phi).map_err(py_err)?;
        wrap(mtlab::StateModel::gaussian_from_shape(FirstMoments::new(rx, rp), shape))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, alpha_im=0.0))]
    fn coherent(alpha: f64, alpha_im: f64) -> PyResult<PyState> {
        wrap(mtlab::StateModel::coherent(Complex64::new(alpha, alpha_im)))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, alpha_im=0.0))]
    fn even_coherent(alpha: f64, alpha_im: f64) -> PyResult<PyState> {
        wrap(mtlab::StateModel::even_coherent(Complex64::new(alpha, alpha_im)))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, alpha_im=0.0))]
    fn odd_coherent(alpha: f64, alpha_im: f64) -> PyResult<PyState> {
        wrap(mtlab::StateModel::odd_coherent(Complex64::new(alpha, alpha_im)))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, m, alpha_im=0.0))]
    fn displaced_fock(alpha: f64, m: u32, alpha_im: f64) -> PyResult<PyState> {
        wrap(mtlab::StateModel::displaced_fock(Complex64::new(alpha, alpha_im), m))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, m, alpha_im=0.0))]
    fn photon_added(alpha: f64, m: u32, alpha_im: f64) -> PyResult<PyState> {
        wrap(mtlab::StateModel::photon_added(Complex64::new(alpha, alpha_im), m))
    }

    /// Parse a `family=... key=value` descriptor.
    #[staticmethod]
    fn from_descriptor(text: &str) -> PyResult<PyState> {
        wrap(mtlab::StateModel::from_descriptor(text))
    }

    fn descriptor(&self) -> String {
        self.inner.descriptor()
    }

    fn first_moments(&self) -> (f64, f64) {
        let r = self.inner.first_moments();
        (r.rx, r.rp)
    }

    fn covariance(&self) -> Mat {
        mat(&self.inner.covariance())
    }

    fn second_moment_matrix(&self) -> Mat {
        mat(&self.inner.second_moment_matrix())
    }

    /// `(<X>, <X^2>, <X^3>, <X^4>)` at angle `theta`.
    fn quadrature_moments(&self, theta: f64) -> (f64, f64, f64, f64) {
        let t = self.inner.quadrature_moments(theta);
        (t.m1, t.m2, t.m3, t.m4)
    }

    /// Husimi moment `E_Q[x^k p^l]`, `k + l <= 4`.
    fn husimi_moment(&self, k: usize, l: usize) -> PyResult<f64> {
        if k + l > 4 {
            return Err(PyValueError::new_err("Husimi moments are available up to total order 4"));
        }
        Ok(self.inner.husimi_moments().moment(k, l))
    }

    fn quadrature_pdf(&self, theta: f64, x: f64) -> PyResult<f64> {
        self.inner.quadrature_pdf(theta, x).map_err(py_err)
    }

    fn husimi_pdf(&self, x: f64, p: f64) -> PyResult<f64> {
        self.inner.husimi_pdf(x, p).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("StateModel({})", self.inner.descriptor())
    }
}

/// All four scaled bounds and both ratios.
#[pyfunction]
fn crb_report<'py>(py: Python<'py>, state: &PyState) -> PyResult<Bound<'py, PyDict>> {
    let r = crb::crb_report(&state.inner).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("h1_hom", r.h1_hom)?;
    d.set_item("h1_het", r.h1_het)?;
    d.set_item("h2_hom", r.h2_hom)?;
    d.set_item("h2_het", r.h2_het)?;
    d.set_item("gamma1", r.gamma1)?;
    d.set_item("gamma2", r.gamma2)?;
    Ok(d)
}

#[pyfunction]
fn gamma1(state: &PyState) -> f64 {
    crb::gamma1(&state.inner)
}

#[pyfunction]
fn gamma2(state: &PyState) -> PyResult<f64> {
    crb::gamma2(&state.inner).map_err(py_err)
}

/// Homodyne Fisher matrix (first: 2x2, second: 3x3 in vec coordinates).
#[pyfunction]
#[pyo3(signature = (state, order=2))]
fn fisher_hom(state: &PyState, order: u32) -> PyResult<Vec<Vec<f64>>> {
    let f = match order {
        1 => crb::fisher_hom_first(&state.inner),
        2 => crb::fisher_hom_second(&state.inner, crb::Method::Quadrature),
        _ => return Err(PyValueError::new_err("order must be 1 or 2")),
    }
    .map_err(py_err)?;
    Ok(f.rows())
}

/// Amplitude at which `gamma2` crosses unity, or `None` when it never exceeds it.
#[pyfunction]
#[pyo3(signature = (family, m=0, lo=0.0, hi=20.0))]
fn find_crossover(family: &str, m: u32, lo: f64, hi: f64) -> PyResult<Option<(f64, f64)>> {
    let f = AmplitudeFamily::parse(family, m).map_err(py_err)?;
    Ok(match crb::find_crossover(f, (lo, hi)).map_err(py_err)? {
        Crossover::At { alpha0, h2 } => Some((alpha0, h2)),
        Crossover::AlwaysBelowUnity => None,
    })
}

/// `(alpha0, gamma2)` at the minimum of `gamma2` over the amplitude.
#[pyfunction]
#[pyo3(signature = (family, m=0))]
fn minimize_gamma2(family: &str, m: u32) -> PyResult<(f64, f64)> {
    let f = AmplitudeFamily::parse(family, m).map_err(py_err)?;
    let r = crb::minimize_gamma2(f, None).map_err(py_err)?;
    Ok((r.alpha0, r.gamma2))
}

/// `(phases, samples)` with one list of quadrature values per phase.
#[pyfunction]
fn sample_homodyne(py: Python<'_>, state: &PyState, n_theta: usize, n: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let s = state.inner;
    let d = py.detach(move || sampler::sample_homodyne(&s, n_theta, n, seed)).map_err(py_err)?;
    Ok((d.phases, d.samples))
}

/// List of `(x, p)` Husimi samples.
#[pyfunction]
fn sample_heterodyne(py: Python<'_>, state: &PyState, n: usize, seed: u64) -> PyResult<Vec<(f64, f64)>> {
    let s = state.inner;
    Ok(py.detach(move || sampler::sample_heterodyne(&s, n, seed)).map_err(py_err)?.points)
}

fn estimate_dict<'py>(py: Python<'py>, e: &MomentEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scheme", e.scheme.name())?;
    if let Some(r) = e.r_hat() {
        d.set_item("r_hat", (r.rx, r.rp))?;
    }
    if let Some(g) = e.g2_hat() {
        d.set_item("g2_hat", mat(&g))?;
    }
    if let Some(g) = e.g2_het_hat {
        d.set_item("g2_het_hat", mat(&g))?;
    }
    d.set_item("N", e.n)?;
    Ok(d)
}

/// Linear and optimal first-moment estimates and the optimal second-moment
/// estimate from per-phase homodyne samples.
#[pyfunction]
fn estimate_homodyne<'py>(py: Python<'py>, phases: Vec<f64>, samples: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let d = HomodyneDataset { state: String::new(), phases, samples, seed: 0 };
    let p = estimators::processed_moments(&d).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("linear_first", estimate_dict(py, &estimators::linear_first_estimator(&p).map_err(py_err)?)?)?;
    out.set_item("optimal_first", estimate_dict(py, &estimators::optimal_first_estimator(&p).map_err(py_err)?)?)?;
    if p.phases.len() >= 3 {
        out.set_item("optimal_second", estimate_dict(py, &estimators::optimal_second_estimator(&p).map_err(py_err)?)?)?;
    }
    Ok(out)
}

/// Sample-mean estimates from heterodyne points.
#[pyfunction]
fn estimate_heterodyne<'py>(py: Python<'py>, points: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyDict>> {
    let d = HeterodyneDataset { state: String::new(), points, seed: 0 };
    let out = PyDict::new(py);
    out.set_item("first", estimate_dict(py, &estimators::het_first_estimator(&d).map_err(py_err)?)?)?;
    out.set_item("second", estimate_dict(py, &estimators::het_second_estimator(&d).map_err(py_err)?)?)?;
    Ok(out)
}

fn mc_dict<'py>(py: Python<'py>, r: &McReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scheme", r.scheme.name())?;
    d.set_item("order", if r.order == MomentOrder::First { "first" } else { "second" })?;
    d.set_item("N", r.n)?;
    d.set_item("trials", r.trials)?;
    d.set_item("scaled_mse", r.scaled_mse)?;
    d.set_item("stderr", r.stderr)?;
    d.set_item("scrb", r.scrb)?;
    d.set_item("ratio", r.ratio)?;
    d.set_item("raw_scaled_mse", r.raw_scaled_mse)?;
    d.set_item("seed", r.seed)?;
    Ok(d)
}

/// Monte-Carlo scaled MSE for every order the scheme supports.
#[pyfunction]
#[pyo3(signature = (state, scheme, n, trials, n_theta=24, seed=0))]
fn monte_carlo<'py>(
    py: Python<'py>,
    state: &PyState,
    scheme: &str,
    n: usize,
    trials: usize,
    n_theta: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let scheme = Scheme::parse(scheme).map_err(py_err)?;
    let s = state.inner;
    let cfg = McSettings { n, trials, n_theta, seed };
    let reports = py.detach(move || estimators::monte_carlo_all(&s, scheme, &cfg)).map_err(py_err)?;
    reports.iter().map(|r| mc_dict(py, r)).collect()
}

/// Run a CLI experiment and return its CSV text.
#[pyfunction]
#[pyo3(signature = (experiment, config="", overrides=Vec::new()))]
fn run_experiment(experiment: &str, config: &str, overrides: Vec<String>) -> PyResult<String> {
    let mut c = Config::parse(config).map_err(py_err)?;
    for o in &overrides {
        c.set(o).map_err(py_err)?;
    }
    let cfg = ExperimentConfig::new(c, Some(experiment)).map_err(py_err)?;
    let report = experiments::run(&cfg).map_err(py_err)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf).map_err(py_err)?;
    String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn mtlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(crb_report, m)?)?;
    m.add_function(wrap_pyfunction!(gamma1, m)?)?;
    m.add_function(wrap_pyfunction!(gamma2, m)?)?;
    m.add_function(wrap_pyfunction!(fisher_hom, m)?)?;
    m.add_function(wrap_pyfunction!(find_crossover, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_gamma2, m)?)?;
    m.add_function(wrap_pyfunction!(sample_homodyne, m)?)?;
    m.add_function(wrap_pyfunction!(sample_heterodyne, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_homodyne, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_heterodyne, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
