//! Python bindings for the `rsic` crate.
//!
//! Matrices cross the boundary as lists of rows; the `DenseMatrix` class keeps
//! them on the Rust side when the same matrix is used several times.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use rsic::baselines::Method;
use rsic::matcore::{self, MatrixFormat};
use rsic::rsic::{detect_islands as detect, IslandParams, DEFAULT_THETA_FLAT};
use rsic::sweep::{run_sweep_on, SweepConfig};
use rsic::{Algorithm, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Row-major dense matrix of f64.
#[pyclass(name = "DenseMatrix", module = "pyrsic", skip_from_py_object)]
#[derive(Clone)]
struct PyDense(matcore::DenseMatrix);

#[pymethods]
impl PyDense {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        matcore::DenseMatrix::from_rows(&rows).map(PyDense).map_err(py_err)
    }

    #[staticmethod]
    fn zeros(rows: usize, cols: usize) -> Self {
        PyDense(matcore::DenseMatrix::zeros(rows, cols))
    }

    #[staticmethod]
    #[pyo3(signature = (path, format = "csv", header = false))]
    fn load(path: &str, format: &str, header: bool) -> PyResult<Self> {
        let fmt = parse_format(format, header)?;
        matcore::load_matrix(path, fmt).map(PyDense).map_err(py_err)
    }

    #[pyo3(signature = (path, format = "csv"))]
    fn save(&self, path: &str, format: &str) -> PyResult<()> {
        let fmt = parse_format(format, false)?;
        matcore::save_matrix(&self.0, path, fmt).map_err(py_err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        let (m, n) = self.0.shape();
        if i >= m || j >= n {
            return Err(PyValueError::new_err(format!("index ({i}, {j}) out of bounds for {m}x{n}")));
        }
        Ok(self.0.get(i, j))
    }

    fn to_list(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }

    fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    fn matmul(&self, other: PyRef<'_, PyDense>) -> PyResult<Self> {
        self.0.matmul(&other.0).map(PyDense).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let (m, n) = self.0.shape();
        format!("DenseMatrix({m}x{n})")
    }

    fn __eq__(&self, other: PyRef<'_, PyDense>) -> bool {
        self.0 == other.0
    }
}

fn parse_format(format: &str, header: bool) -> PyResult<MatrixFormat> {
    match format.parse::<MatrixFormat>().map_err(py_err)? {
        MatrixFormat::Csv { .. } => Ok(MatrixFormat::Csv { header }),
        f => Ok(f),
    }
}

/// Result of a factorization: `W`, `H` and the objective after every update.
#[pyclass(name = "FactorPair", module = "pyrsic")]
struct PyFactors(rsic::FactorPair);

#[pymethods]
impl PyFactors {
    #[getter]
    fn w(&self) -> PyDense {
        PyDense(self.0.w.clone())
    }

    #[getter]
    fn h(&self) -> PyDense {
        PyDense(self.0.h.clone())
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank()
    }

    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.0.objective_trace.clone()
    }

    fn reconstruct(&self) -> PyDense {
        PyDense(self.0.reconstruct())
    }

    fn __repr__(&self) -> String {
        format!("FactorPair(rank={})", self.0.rank())
    }
}

/// Seeded initial factors for every run, sliced per rank.
#[pyclass(name = "InitSet", module = "pyrsic")]
struct PyInitSet(rsic::InitSet);

#[pymethods]
impl PyInitSet {
    #[new]
    fn new(m: usize, n: usize, k_min: usize, k_max: usize, runs: usize, seed: u64) -> PyResult<Self> {
        rsic::make_init_set(m, n, k_min, k_max, runs, seed)
            .map(PyInitSet)
            .map_err(py_err)
    }

    #[getter]
    fn runs(&self) -> usize {
        self.0.runs()
    }

    fn slice(&self, run: usize, k: usize) -> PyResult<(PyDense, PyDense)> {
        let (w, h) = self.0.slice(run, k).map_err(py_err)?;
        Ok((PyDense(w), PyDense(h)))
    }
}

/// Fits `A ~ W H` from the given start with a fixed number of updates.
#[pyfunction]
#[pyo3(signature = (a, w0, h0, iterations, algorithm = "scd"))]
fn fit(
    a: PyRef<'_, PyDense>,
    w0: PyRef<'_, PyDense>,
    h0: PyRef<'_, PyDense>,
    iterations: usize,
    algorithm: &str,
) -> PyResult<PyFactors> {
    let alg: Algorithm = algorithm.parse().map_err(py_err)?;
    rsic::fit(&a.0, &w0.0, &h0.0, alg, iterations)
        .map(PyFactors)
        .map_err(py_err)
}

#[pyfunction]
fn relative_residual(a: PyRef<'_, PyDense>, f: PyRef<'_, PyFactors>) -> PyResult<f64> {
    rsic::relative_residual(&a.0, &f.0).map_err(py_err)
}

/// Random holdout pattern; `True` marks a held-out entry.
#[pyfunction]
#[pyo3(signature = (rows, cols, fraction, seed, repeat = 0))]
fn wold_mask(rows: usize, cols: usize, fraction: f64, seed: u64, repeat: u64) -> PyResult<Vec<Vec<bool>>> {
    let mut rng = rsic::rng::stream(seed, "imputation-cv", &[repeat]);
    let mask = matcore::generate_wold_mask(rows, cols, fraction, &mut rng).map_err(py_err)?;
    Ok((0..rows).map(|i| mask.row_flags(i).to_vec()).collect())
}

fn to_mask(held: Vec<Vec<bool>>) -> PyResult<rsic::MaskMatrix> {
    let rows = held.len();
    let cols = held.first().map_or(0, Vec::len);
    if held.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("mask rows must have equal length"));
    }
    rsic::MaskMatrix::from_flags(rows, cols, held.concat()).map_err(py_err)
}

/// Fits only the observed entries, ignoring those marked held out.
#[pyfunction]
fn masked_fit(
    a: PyRef<'_, PyDense>,
    held: Vec<Vec<bool>>,
    w0: PyRef<'_, PyDense>,
    h0: PyRef<'_, PyDense>,
    iterations: usize,
) -> PyResult<PyFactors> {
    let mask = to_mask(held)?;
    rsic::masked_fit(&a.0, &mask, &w0.0, &h0.0, iterations)
        .map(PyFactors)
        .map_err(py_err)
}

/// Relative reconstruction error on the held-out entries.
#[pyfunction]
fn masked_error(a: PyRef<'_, PyDense>, held: Vec<Vec<bool>>, f: PyRef<'_, PyFactors>) -> PyResult<f64> {
    let mask = to_mask(held)?;
    rsic::masked_error(&a.0, &mask, &f.0).map_err(py_err)
}

/// Mean coordinatewise IQR of the residuals of several same-rank fits.
#[pyfunction]
fn mci(a: PyRef<'_, PyDense>, fits: Vec<PyRef<'_, PyFactors>>) -> PyResult<f64> {
    let fits: Vec<rsic::FactorPair> = fits.iter().map(|f| f.0.clone()).collect();
    let stack = rsic::rsic::build_residual_stack(&a.0, &fits).map_err(py_err)?;
    Ok(rsic::rsic::mci(&stack))
}

/// Ranks whose MCI is followed by a significant increase.
#[pyfunction]
#[pyo3(signature = (k_min, values, theta = 0.25, theta_flat = DEFAULT_THETA_FLAT, floor = 0.0))]
fn detect_islands(k_min: usize, values: Vec<f64>, theta: f64, theta_flat: f64, floor: f64) -> PyResult<Vec<usize>> {
    let curve = rsic::MciCurve::new(k_min, values).map_err(py_err)?;
    let params = IslandParams {
        theta,
        theta_flat,
        floor,
    };
    detect(&curve, &params).map_err(py_err)
}

/// The 256 x 1024 swimmer dataset.
#[pyfunction]
fn generate_swimmer() -> PyDense {
    PyDense(matcore::generate_swimmer())
}

/// Runs a rank sweep and returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (
    a, k_min = 2, k_max = None, methods = vec!["mci".to_string()], inits = 100,
    iterations = None, algorithm = "scd", seed = 123_456_789, repeats = 10,
    holdout_fraction = 0.1, theta = 0.25, cost_ceiling = 1_000_000_000_000u128, threads = 1
))]
#[allow(clippy::too_many_arguments)]
fn run_sweep(
    py: Python<'_>,
    a: PyRef<'_, PyDense>,
    k_min: usize,
    k_max: Option<usize>,
    methods: Vec<String>,
    inits: usize,
    iterations: Option<usize>,
    algorithm: &str,
    seed: u64,
    repeats: usize,
    holdout_fraction: f64,
    theta: f64,
    cost_ceiling: u128,
    threads: usize,
) -> PyResult<String> {
    let methods = methods
        .iter()
        .map(|m| m.parse::<Method>().map_err(py_err))
        .collect::<PyResult<Vec<_>>>()?;
    let mut config = SweepConfig {
        k_min,
        k_max,
        methods,
        inits,
        algorithm: algorithm.parse().map_err(py_err)?,
        seed,
        repeats,
        holdout_fraction,
        theta,
        cost_ceiling,
        threads,
        ..SweepConfig::default()
    };
    if let Some(it) = iterations {
        match config.algorithm {
            Algorithm::Scd => config.scd_iters = it,
            Algorithm::Mu => config.mu_iters = it,
        }
    }
    let matrix = a.0.clone();
    let (report, _) = py
        .detach(move || run_sweep_on(&matrix, &config))
        .map_err(py_err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn pyrsic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDense>()?;
    m.add_class::<PyFactors>()?;
    m.add_class::<PyInitSet>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(relative_residual, m)?)?;
    m.add_function(wrap_pyfunction!(wold_mask, m)?)?;
    m.add_function(wrap_pyfunction!(masked_fit, m)?)?;
    m.add_function(wrap_pyfunction!(masked_error, m)?)?;
    m.add_function(wrap_pyfunction!(mci, m)?)?;
    m.add_function(wrap_pyfunction!(detect_islands, m)?)?;
    m.add_function(wrap_pyfunction!(generate_swimmer, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
