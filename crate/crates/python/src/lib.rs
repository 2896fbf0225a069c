//! Python bindings for `mvgamma`.
//!
//! Index arguments are 0-based on this side. Structured reports (gap checks,
//! coefficient tables, averaged correlations) come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use mvgamma::gci::{self, GapOptions};
use mvgamma::matrix::{self as mx};
use mvgamma::oracle::{self, OracleParams};
use mvgamma::special;
use mvgamma::{dist, BlockPartition, Error, MvGammaParams, RngStream, SeriesControl, ShapeParameter};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Internal(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn shape(alpha: f64) -> PyResult<ShapeParameter> {
    ShapeParameter::new(alpha).map_err(to_py)
}

fn params(alpha: f64, r: &CorrelationMatrix) -> PyResult<MvGammaParams> {
    MvGammaParams::new(shape(alpha)?, r.inner.clone()).map_err(to_py)
}

fn as_dict<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Symmetric positive-definite matrix with unit diagonal.
#[pyclass(name = "CorrelationMatrix", frozen, skip_from_py_object, module = "mvgamma_py")]
#[derive(Clone)]
struct CorrelationMatrix {
    inner: mx::CorrelationMatrix,
}

#[pymethods]
impl CorrelationMatrix {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: mx::CorrelationMatrix::from_rows(&rows).map_err(to_py)? })
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self { inner: mx::CorrelationMatrix::identity(n) }
    }

    #[staticmethod]
    fn bivariate(rho: f64) -> PyResult<Self> {
        Ok(Self { inner: mx::CorrelationMatrix::bivariate(rho).map_err(to_py)? })
    }

    #[staticmethod]
    fn equicorrelated(n: usize, rho: f64) -> PyResult<Self> {
        Ok(Self { inner: mx::CorrelationMatrix::equicorrelated(n, rho).map_err(to_py)? })
    }

    /// Deterministic random matrix with minimal eigenvalue at least `min_eig_floor`.
    #[staticmethod]
    #[pyo3(signature = (n, seed=42, min_eig_floor=0.05))]
    fn random(n: usize, seed: u64, min_eig_floor: f64) -> PyResult<Self> {
        Ok(Self { inner: mx::random_correlation(n, seed, min_eig_floor).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: mx::CorrelationMatrix::from_json(text).map_err(to_py)? })
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(Self { inner: mx::CorrelationMatrix::load(&path).map_err(to_py)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows()
    }

    fn min_eigenvalue(&self) -> PyResult<f64> {
        self.inner.min_eigenvalue().map_err(to_py)
    }

    /// `(lambda, b_rows, rank_a)` with `R = lambda (I + B Bᵀ)`.
    fn min_eig_decompose(&self) -> PyResult<(f64, Vec<Vec<f64>>, usize)> {
        let s = mx::min_eig_decompose(&self.inner).map_err(to_py)?;
        let rows = (0..self.inner.dim()).map(|j| s.row(j)).collect();
        Ok((s.lambda, rows, s.rank_a))
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.dim()
    }

    fn __repr__(&self) -> String {
        format!("CorrelationMatrix({:?})", self.inner.rows())
    }
}

/// A Monte Carlo estimate with its standard error.
#[pyclass(name = "McEstimate", frozen, skip_from_py_object, module = "mvgamma_py")]
#[derive(Clone, Copy)]
struct McEstimate {
    inner: mvgamma::McEstimate,
}

impl From<mvgamma::McEstimate> for McEstimate {
    fn from(inner: mvgamma::McEstimate) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl McEstimate {
    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn std_err(&self) -> f64 {
        self.inner.std_err
    }

    #[getter]
    fn samples(&self) -> usize {
        self.inner.samples
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __float__(&self) -> f64 {
        self.inner.value
    }

    fn __repr__(&self) -> String {
        let e = &self.inner;
        format!("McEstimate(value={}, std_err={}, samples={}, seed={})", e.value, e.std_err, e.samples, e.seed)
    }
}

/// `|I + RT|^(-alpha)`.
#[pyfunction]
fn laplace_transform(alpha: f64, r: &CorrelationMatrix, t: Vec<f64>) -> PyResult<f64> {
    dist::laplace_transform(&params(alpha, r)?, &t).map_err(to_py)
}

/// Whether `2α ∈ ℕ or 2α > n−2` holds.
#[pyfunction]
fn is_admissible(alpha: f64, n: usize) -> PyResult<bool> {
    Ok(dist::validate_admissibility(shape(alpha)?, n).is_ok())
}

#[pyfunction]
#[pyo3(signature = (alpha, r, x, samples=100_000, seed=42))]
fn cdf(py: Python<'_>, alpha: f64, r: &CorrelationMatrix, x: Vec<f64>, samples: usize, seed: u64) -> PyResult<McEstimate> {
    let p = params(alpha, r)?;
    py.detach(|| dist::cdf_mc(&p, &x, samples, RngStream::new(seed, 0)))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (alpha, r, x, samples=100_000, seed=42))]
fn pdf(py: Python<'_>, alpha: f64, r: &CorrelationMatrix, x: Vec<f64>, samples: usize, seed: u64) -> PyResult<McEstimate> {
    let p = params(alpha, r)?;
    py.detach(|| dist::pdf_mc(&p, &x, samples, RngStream::new(seed, 0)))
        .map(Into::into)
        .map_err(to_py)
}

/// Mixed partial of the cdf over the 0-based coordinates in `indices`.
#[pyfunction]
#[pyo3(signature = (alpha, r, x, indices, samples=100_000, seed=42))]
fn mixed_partial(
    py: Python<'_>,
    alpha: f64,
    r: &CorrelationMatrix,
    x: Vec<f64>,
    indices: Vec<usize>,
    samples: usize,
    seed: u64,
) -> PyResult<McEstimate> {
    let p = params(alpha, r)?;
    py.detach(|| dist::mixed_partial_cdf_mc(&p, &x, &indices, samples, RngStream::new(seed, 0)))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (alpha, r, x, samples=100_000, seed=42))]
fn oracle_cdf(py: Python<'_>, alpha: f64, r: &CorrelationMatrix, x: Vec<f64>, samples: usize, seed: u64) -> PyResult<McEstimate> {
    let p = OracleParams::from_alpha(alpha, r.inner.clone()).map_err(to_py)?;
    py.detach(|| oracle::cdf_oracle(&p, &x, samples, RngStream::new(seed, 0)))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (alpha, r, t, samples=100_000, seed=42))]
fn oracle_lt(py: Python<'_>, alpha: f64, r: &CorrelationMatrix, t: Vec<f64>, samples: usize, seed: u64) -> PyResult<McEstimate> {
    let p = OracleParams::from_alpha(alpha, r.inner.clone()).map_err(to_py)?;
    py.detach(|| oracle::lt_oracle(&p, &t, samples, RngStream::new(seed, 0)))
        .map(Into::into)
        .map_err(to_py)
}

/// Gap report as a dict; `taus` adds derivative checks.
#[pyfunction]
#[pyo3(signature = (alpha, r, x, n1, samples=100_000, seed=42, taus=None))]
#[allow(clippy::too_many_arguments)]
fn gci_check(
    py: Python<'_>,
    alpha: f64,
    r: &CorrelationMatrix,
    x: Vec<f64>,
    n1: usize,
    samples: usize,
    seed: u64,
    taus: Option<Vec<f64>>,
) -> PyResult<Py<PyAny>> {
    let alpha = shape(alpha)?;
    let part = BlockPartition::new(r.inner.dim(), n1).map_err(to_py)?;
    let options = GapOptions { taus: taus.unwrap_or_default(), series: SeriesControl::default() };
    let report = py
        .detach(|| gci::gci_gap(&r.inner, part, alpha, &x, samples, RngStream::new(seed, 0), &options))
        .map_err(to_py)?;
    as_dict(py, &report)
}

/// Closed-form τ-derivative of `|I + R_τT|^(-alpha)`.
#[pyfunction]
fn lt_tau_derivative(alpha: f64, r: &CorrelationMatrix, n1: usize, tau: f64, t: Vec<f64>) -> PyResult<f64> {
    let part = BlockPartition::new(r.inner.dim(), n1).map_err(to_py)?;
    gci::lt_tau_derivative_closed(&r.inner, part, tau, shape(alpha)?, &t).map_err(to_py)
}

/// Per-split coefficients at one τ, with 1-based index sets.
#[pyfunction]
fn coefficients(py: Python<'_>, alpha: f64, r: &CorrelationMatrix, n1: usize, tau: f64) -> PyResult<Py<PyAny>> {
    let part = BlockPartition::new(r.inner.dim(), n1).map_err(to_py)?;
    let table = gci::coefficient_table(&r.inner, part, tau, shape(alpha)?).map_err(to_py)?;
    as_dict(py, &table)
}

#[pyfunction]
fn averaged_correlations(py: Python<'_>, r: &CorrelationMatrix, n1: usize) -> PyResult<Py<PyAny>> {
    let part = BlockPartition::new(r.inner.dim(), n1).map_err(to_py)?;
    as_dict(py, &gci::averaged_correlations(&r.inner, part).map_err(to_py)?)
}

#[pyfunction]
fn gamma_cdf(alpha: f64, x: f64) -> PyResult<f64> {
    Ok(special::gamma_cdf(shape(alpha)?, x))
}

#[pyfunction]
fn noncentral_gamma_cdf(alpha: f64, x: f64, y: f64) -> PyResult<f64> {
    special::noncentral_gamma_cdf(shape(alpha)?, x, y, &SeriesControl::default()).map_err(to_py)
}

#[pyfunction]
fn noncentral_gamma_pdf(alpha: f64, x: f64, y: f64) -> PyResult<f64> {
    special::noncentral_gamma_pdf(shape(alpha)?, x, y, &SeriesControl::default()).map_err(to_py)
}

#[pymodule]
fn mvgamma_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<CorrelationMatrix>()?;
    m.add_class::<McEstimate>()?;
    m.add_function(wrap_pyfunction!(laplace_transform, m)?)?;
    m.add_function(wrap_pyfunction!(is_admissible, m)?)?;
    m.add_function(wrap_pyfunction!(cdf, m)?)?;
    m.add_function(wrap_pyfunction!(pdf, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_partial, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_lt, m)?)?;
    m.add_function(wrap_pyfunction!(gci_check, m)?)?;
    m.add_function(wrap_pyfunction!(lt_tau_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(averaged_correlations, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(noncentral_gamma_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(noncentral_gamma_pdf, m)?)?;
    Ok(())
}
