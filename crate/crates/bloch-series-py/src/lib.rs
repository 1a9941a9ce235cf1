//! Python bindings: crystals from TOML text, limit and resonance spectra,
//! certified series expansions, the plane-wave oracle and the closed-form
//! certificate constants.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use bloch_series::certificates::{self, Certificate};
use bloch_series::lattice_green::QuasiMomentum;
use bloch_series::oracle::{bloch_solve_with, FactorizationRule, OracleOptions};
use bloch_series::pipeline::{self, CrystalConfig, Problem};
use bloch_series::series::{evaluate_series, SeriesExpansion};
use bloch_series::{Error, C64};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Contract(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn alpha(a: (f64, f64)) -> PyResult<QuasiMomentum> {
    QuasiMomentum::new(a.0, a.1).map_err(py_err)
}

/// Convergence certificate of one eigenvalue group.
#[pyclass(name = "Certificate", module = "bloch_series_py")]
#[derive(Clone)]
struct PyCertificate {
    inner: Certificate,
}

#[pymethods]
impl PyCertificate {
    /// Certificate for buffered disks of radius `a` inside radius `b`.
    #[staticmethod]
    fn buffered_disks(alpha_xy: (f64, f64), d: f64, a: f64, b: f64) -> PyResult<Self> {
        let inner = Certificate::buffered_disks(alpha(alpha_xy)?, d, a, b).map_err(py_err)?;
        Ok(PyCertificate { inner })
    }

    #[getter]
    fn d(&self) -> f64 {
        self.inner.d
    }

    #[getter]
    fn mu_minus(&self) -> f64 {
        self.inner.mu_minus
    }

    #[getter]
    fn z_star(&self) -> f64 {
        self.inner.z_star
    }

    #[getter]
    fn r_star(&self) -> f64 {
        self.inner.r_star
    }

    #[getter]
    fn theta(&self) -> Option<f64> {
        self.inner.theta
    }

    /// Whether `|z| < r*`.
    #[pyo3(signature = (z_re, z_im=None))]
    fn check(&self, z_re: f64, z_im: Option<f64>) -> bool {
        self.inner.check(C64::new(z_re, z_im.unwrap_or(0.0))).is_certified()
    }

    /// Truncation bound for the partial sum through order `p`.
    #[pyo3(signature = (p, z_re, z_im=None))]
    fn bound(&self, p: usize, z_re: f64, z_im: Option<f64>) -> PyResult<f64> {
        self.inner
            .bound(p, C64::new(z_re, z_im.unwrap_or(0.0)))
            .map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| py_err(e.into()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Certificate(d={:.6e}, mu_minus={:.6}, z_star={:.6}, r_star={:.6e})",
            self.inner.d, self.inner.mu_minus, self.inner.z_star, self.inner.r_star
        )
    }
}

/// Truncated series `β(z) = Σ β_n z^n` for one eigenvalue group.
#[pyclass(name = "SeriesExpansion", module = "bloch_series_py")]
#[derive(Clone)]
struct PySeriesExpansion {
    inner: SeriesExpansion,
}

#[pymethods]
impl PySeriesExpansion {
    #[getter]
    fn alpha(&self) -> (f64, f64) {
        (self.inner.alpha[0], self.inner.alpha[1])
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    #[getter]
    fn beta0(&self) -> f64 {
        self.inner.beta0
    }

    /// `β_0, …, β_N`.
    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs.clone()
    }

    #[getter]
    fn method_tags(&self) -> Vec<&'static str> {
        self.inner.method_tags.iter().map(|t| t.as_str()).collect()
    }

    #[getter]
    fn certificate(&self) -> Option<PyCertificate> {
        self.inner
            .certificate
            .clone()
            .map(|inner| PyCertificate { inner })
    }

    fn partial_sum(&self, z: f64, p: usize) -> f64 {
        self.inner.partial_sum(z, p)
    }

    /// `(beta_hat, lambda_hat, error_bound, certified)` at `z = 1/k`.
    fn evaluate(&self, z: f64) -> PyResult<(f64, f64, f64, bool)> {
        let p = evaluate_series(&self.inner, z).map_err(py_err)?;
        Ok((p.beta_hat, p.lambda_hat, p.error_bound, p.certified))
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "SeriesExpansion(alpha=({:.6}, {:.6}), m={}, coeffs={:?})",
            self.inner.alpha[0], self.inner.alpha[1], self.inner.m, self.inner.coeffs
        )
    }
}

/// A validated crystal, built from the same TOML text the CLI reads.
#[pyclass(name = "Crystal", module = "bloch_series_py")]
struct PyCrystal {
    config: CrystalConfig,
    problem: Problem,
}

#[pymethods]
impl PyCrystal {
    #[new]
    fn new(toml_text: &str) -> PyResult<Self> {
        let config = CrystalConfig::from_toml_str(toml_text).map_err(py_err)?;
        let problem = config.problem().map_err(py_err)?;
        Ok(PyCrystal { config, problem })
    }

    /// Sampled path quasimomenta.
    fn path(&self) -> Vec<(f64, f64)> {
        self.problem.alphas.iter().map(|a| (a.x(), a.y())).collect()
    }

    /// Limit values `(value, provenance, multiplicity)`, largest first.
    fn limit_spectrum(&self, alpha_xy: (f64, f64)) -> PyResult<Vec<(f64, String, usize)>> {
        let count = (self.problem.branches + 1) * self.problem.set.len();
        let spec = self.problem.dirichlet(count).map_err(py_err)?;
        let lim = self.problem.limit(alpha(alpha_xy)?, &spec).map_err(py_err)?;
        Ok(lim
            .values
            .iter()
            .map(|v| (v.value, v.provenance.label(), v.multiplicity))
            .collect())
    }

    /// Resonances `μ_i`, ascending.
    fn np_spectrum(&self, alpha_xy: (f64, f64)) -> PyResult<Vec<f64>> {
        let (_, np) = self.problem.resonances(alpha(alpha_xy)?).map_err(py_err)?;
        Ok(np.mu)
    }

    /// Series expansions of the configured branches at one quasimomentum.
    fn expand(&self, alpha_xy: (f64, f64)) -> PyResult<Vec<PySeriesExpansion>> {
        let count = (self.problem.branches + 1) * self.problem.set.len();
        let spec = self.problem.dirichlet(count).map_err(py_err)?;
        let an = pipeline::analyze_alpha(&self.problem, &spec, alpha(alpha_xy)?, true).map_err(py_err)?;
        Ok(an
            .expansions
            .into_iter()
            .map(|inner| PySeriesExpansion { inner })
            .collect())
    }

    /// Lowest `count` oracle eigenvalues `ω²` at contrast `k`.
    #[pyo3(signature = (alpha_xy, k, count, cutoff=12, richardson=false))]
    fn oracle(&self, alpha_xy: (f64, f64), k: f64, count: usize, cutoff: usize, richardson: bool) -> PyResult<Vec<f64>> {
        let opts = OracleOptions {
            cutoff,
            rule: FactorizationRule::Inverse,
            richardson,
        };
        let r = bloch_solve_with(&self.problem.set, alpha(alpha_xy)?, k, count, &opts).map_err(py_err)?;
        Ok(r.best().to_vec())
    }

    /// Band CSV text for the configured path and contrast.
    #[pyo3(signature = (jobs=None))]
    fn band_csv(&self, jobs: Option<usize>) -> PyResult<String> {
        let r = pipeline::run_band(&self.config, jobs).map_err(py_err)?;
        Ok(pipeline::band_csv(&r.rows))
    }
}

/// `θ = (b² − a²)/(b² + a²)`.
#[pyfunction]
fn theta_disks(a: f64, b: f64) -> PyResult<f64> {
    certificates::theta_disks(a, b).map_err(py_err)
}

/// `μ⁻ = min(½, θ/2) − ½`.
#[pyfunction]
fn mu_minus_from_theta(theta: f64) -> PyResult<f64> {
    certificates::mu_minus_from_theta(theta).map_err(py_err)
}

/// `z* = (μ⁻ + ½)/(μ⁻ − ½)`.
#[pyfunction]
fn z_star(mu_minus: f64) -> PyResult<f64> {
    certificates::z_star(mu_minus).map_err(py_err)
}

/// Convergence radius `r*`.
#[pyfunction]
fn radius(alpha_xy: (f64, f64), d: f64, mu_minus: f64, z_star: f64) -> PyResult<f64> {
    certificates::radius(alpha(alpha_xy)?, d, mu_minus, z_star).map_err(py_err)
}

#[pymodule]
fn bloch_series_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCrystal>()?;
    m.add_class::<PySeriesExpansion>()?;
    m.add_class::<PyCertificate>()?;
    m.add_function(wrap_pyfunction!(theta_disks, m)?)?;
    m.add_function(wrap_pyfunction!(mu_minus_from_theta, m)?)?;
    m.add_function(wrap_pyfunction!(z_star, m)?)?;
    m.add_function(wrap_pyfunction!(radius, m)?)?;
    Ok(())
}
