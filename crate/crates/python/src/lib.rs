//! Python bindings: sparse matrices, the interval solver, the eigenvalue count
//! estimate and the filter polynomial.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cjfeast::solver::Solver;
use cjfeast::trace::dimension_for;
use cjfeast::{DegreeChoice, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidInterval { .. }
        | Error::DimensionMismatch { .. } => PyValueError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Compressed sparse row matrix.
#[pyclass(name = "SparseMatrix", module = "pycjfeast", frozen)]
pub struct PySparseMatrix {
    inner: cjfeast::SparseMatrix,
}

#[pymethods]
impl PySparseMatrix {
    /// Builds from coordinate lists; duplicate entries are summed.
    #[new]
    fn new(
        rows: usize,
        cols: usize,
        row_idx: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> PyResult<Self> {
        if row_idx.len() != values.len() || col_idx.len() != values.len() {
            return Err(PyValueError::new_err(
                "row_idx, col_idx and values must have the same length",
            ));
        }
        let t: Vec<(usize, usize, f64)> = row_idx
            .into_iter()
            .zip(col_idx)
            .zip(values)
            .map(|((r, c), v)| (r, c, v))
            .collect();
        let inner = cjfeast::SparseMatrix::from_triplets(rows, cols, &t).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_dense(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let block = cjfeast::DenseBlock::from_rows(&rows).map_err(to_py)?;
        Ok(Self {
            inner: cjfeast::SparseMatrix::from_dense(&block),
        })
    }

    #[staticmethod]
    fn diagonal(values: Vec<f64>) -> Self {
        Self {
            inner: cjfeast::SparseMatrix::diagonal(&values),
        }
    }

    /// Random matrix with `per_col` standard-normal entries in each column.
    #[staticmethod]
    #[pyo3(signature = (rows, cols, per_col, seed=0))]
    fn random(rows: usize, cols: usize, per_col: usize, seed: u64) -> PyResult<Self> {
        let inner = cjfeast::SparseMatrix::random(rows, cols, per_col, seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Reads a Matrix Market coordinate file.
    #[staticmethod]
    fn read(path: std::path::PathBuf) -> PyResult<Self> {
        let inner = cjfeast::read_matrix_market_file(&path).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn write(&self, path: std::path::PathBuf) -> PyResult<()> {
        let f = std::fs::File::create(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        cjfeast::write_matrix_market(&self.inner, std::io::BufWriter::new(f)).map_err(to_py)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    /// Matrix-vector products performed so far.
    #[getter]
    fn mv_count(&self) -> u64 {
        self.inner.mv_count()
    }

    fn matvec(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply(&x).map_err(to_py)
    }

    fn rmatvec(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.apply_transpose(&y).map_err(to_py)
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.inner.to_dense();
        (0..d.rows())
            .map(|i| (0..d.cols()).map(|j| d.get(i, j)).collect())
            .collect()
    }

    /// All singular values, descending, from a dense SVD (min dimension <= 500).
    fn singular_values(&self) -> PyResult<Vec<f64>> {
        let svd = if self.inner.rows() >= self.inner.cols() {
            cjfeast::oracle::sparse_full_svd(&self.inner)
        } else {
            cjfeast::oracle::sparse_full_svd(&self.inner.transpose())
        };
        Ok(svd.map_err(to_py)?.s)
    }

    fn __repr__(&self) -> String {
        format!(
            "SparseMatrix(shape=({}, {}), nnz={})",
            self.inner.rows(),
            self.inner.cols(),
            self.inner.nnz()
        )
    }
}

/// Solver settings; any keyword left out keeps its default.
#[pyclass(
    name = "SolverOptions",
    module = "pycjfeast",
    get_all,
    set_all,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PySolverOptions {
    degree_constant: f64,
    degree: Option<usize>,
    mu: f64,
    dimension: Option<usize>,
    samples: usize,
    tol: f64,
    max_iterations: usize,
    seed: u64,
    bidiag_steps: usize,
    inflate: f64,
    margin: f64,
}

impl From<&PySolverOptions> for cjfeast::SolverOptions {
    fn from(o: &PySolverOptions) -> Self {
        cjfeast::SolverOptions {
            degree_constant: o.degree_constant,
            degree: o.degree,
            mu: o.mu,
            dimension: o.dimension,
            samples: o.samples,
            tol: o.tol,
            max_iterations: o.max_iterations,
            seed: o.seed,
            bidiag_steps: o.bidiag_steps,
            inflate: o.inflate,
            margin: o.margin,
            ..cjfeast::SolverOptions::default()
        }
    }
}

#[pymethods]
impl PySolverOptions {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let d = cjfeast::SolverOptions::default();
        let mut o = Self {
            degree_constant: d.degree_constant,
            degree: d.degree,
            mu: d.mu,
            dimension: d.dimension,
            samples: d.samples,
            tol: d.tol,
            max_iterations: d.max_iterations,
            seed: d.seed,
            bidiag_steps: d.bidiag_steps,
            inflate: d.inflate,
            margin: d.margin,
        };
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                match key.as_str() {
                    "degree_constant" => o.degree_constant = v.extract()?,
                    "degree" => o.degree = v.extract()?,
                    "mu" => o.mu = v.extract()?,
                    "dimension" => o.dimension = v.extract()?,
                    "samples" => o.samples = v.extract()?,
                    "tol" => o.tol = v.extract()?,
                    "max_iterations" => o.max_iterations = v.extract()?,
                    "seed" => o.seed = v.extract()?,
                    "bidiag_steps" => o.bidiag_steps = v.extract()?,
                    "inflate" => o.inflate = v.extract()?,
                    "margin" => o.margin = v.extract()?,
                    other => {
                        return Err(PyValueError::new_err(format!("unknown option {other:?}")))
                    }
                }
            }
        }
        cjfeast::SolverOptions::from(&o).validate().map_err(to_py)?;
        Ok(o)
    }

    fn __repr__(&self) -> String {
        format!(
            "SolverOptions(tol={:e}, mu={}, degree_constant={}, degree={:?}, dimension={:?}, samples={}, seed={})",
            self.tol, self.mu, self.degree_constant, self.degree, self.dimension, self.samples, self.seed
        )
    }
}

#[pyclass(name = "Triplet", module = "pycjfeast", frozen, get_all)]
pub struct PyTriplet {
    sigma: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    residual_norm: f64,
}

#[pymethods]
impl PyTriplet {
    fn __repr__(&self) -> String {
        format!(
            "Triplet(sigma={:.16e}, residual_norm={:.3e})",
            self.sigma, self.residual_norm
        )
    }
}

#[pyclass(name = "Report", module = "pycjfeast", frozen)]
pub struct PyReport {
    inner: cjfeast::SolverReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn stagnated(&self) -> bool {
        self.inner.stagnated
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.filter.degree
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.p
    }

    #[getter]
    fn trace_estimate(&self) -> f64 {
        self.inner.trace.value
    }

    #[getter]
    fn total_mvs(&self) -> u64 {
        self.inner.mvs.total
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    #[getter]
    fn sigmas(&self) -> Vec<f64> {
        self.inner.triplets.iter().map(|t| t.sigma).collect()
    }

    #[getter]
    fn triplets(&self) -> Vec<PyTriplet> {
        self.inner
            .triplets
            .iter()
            .map(|t| PyTriplet {
                sigma: t.sigma,
                u: t.u.clone(),
                v: t.v.clone(),
                residual_norm: t.residual_norm,
            })
            .collect()
    }

    /// Per-iteration history as the CSV text the command line writes.
    fn history_csv(&self) -> String {
        self.inner.history_csv()
    }

    #[pyo3(signature = (emit_vectors=false))]
    fn to_json(&self, emit_vectors: bool) -> String {
        self.inner.to_json(emit_vectors)
    }

    #[pyo3(signature = (emit_vectors=false))]
    fn to_dict<'py>(&self, py: Python<'py>, emit_vectors: bool) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.to_json(emit_vectors))
    }

    fn __len__(&self) -> usize {
        self.inner.triplets.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(converged={}, triplets={}, iterations={}, mvs={})",
            if self.inner.converged {
                "True"
            } else {
                "False"
            },
            self.inner.triplets.len(),
            self.inner.iterations,
            self.inner.mvs.total
        )
    }
}

fn options_or_default(options: Option<PyRef<'_, PySolverOptions>>) -> cjfeast::SolverOptions {
    options
        .map(|o| cjfeast::SolverOptions::from(&*o))
        .unwrap_or_default()
}

/// Singular triplets of `matrix` with sigma in `[a, b]`.
#[pyfunction]
#[pyo3(signature = (matrix, a, b, options=None))]
fn solve(
    py: Python<'_>,
    matrix: &PySparseMatrix,
    a: f64,
    b: f64,
    options: Option<PyRef<'_, PySolverOptions>>,
) -> PyResult<PyReport> {
    let opts = options_or_default(options);
    let inner = py
        .detach(|| cjfeast::solve(&matrix.inner, a, b, opts))
        .map_err(to_py)?;
    Ok(PyReport { inner })
}

/// Estimated number of singular values in `[a, b]` and the resulting subspace
/// dimensions for a few oversampling factors.
#[pyfunction]
#[pyo3(signature = (matrix, a, b, options=None))]
fn count<'py>(
    py: Python<'py>,
    matrix: &PySparseMatrix,
    a: f64,
    b: f64,
    options: Option<PyRef<'_, PySolverOptions>>,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = cjfeast::SolverOptions {
        dimension: Some(1),
        ..options_or_default(options)
    };
    let (h, d, m, std, mvs) = py
        .detach(|| {
            Solver::new(&matrix.inner, a, b, opts).map(|s| {
                let t = s.trace();
                (t.value, t.degree, t.samples, t.sample_std(), s.mvs_so_far())
            })
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("H_M", h)?;
    out.set_item("d", d)?;
    out.set_item("M", m)?;
    out.set_item("sample_std", std)?;
    out.set_item("mvs", mvs)?;
    let p = PyDict::new(py);
    for mu in [1.1, 1.2, 1.5] {
        p.set_item(mu, dimension_for(h, mu))?;
    }
    out.set_item("p", p)?;
    Ok(out)
}

/// Damped Chebyshev filter for `[a, b]` given bounds on the singular values.
#[pyclass(name = "Filter", module = "pycjfeast", frozen)]
pub struct PyFilter {
    inner: cjfeast::FilterSpec,
}

#[pymethods]
impl PyFilter {
    #[new]
    #[pyo3(signature = (sigma_max, sigma_min, a, b, degree=None, degree_constant=2.0))]
    fn new(
        sigma_max: f64,
        sigma_min: f64,
        a: f64,
        b: f64,
        degree: Option<usize>,
        degree_constant: f64,
    ) -> PyResult<Self> {
        let bounds = cjfeast::SpectrumBounds::exact(sigma_max, sigma_min).map_err(to_py)?;
        let choice = match degree {
            Some(d) => DegreeChoice::Explicit(d),
            None => DegreeChoice::Constant(degree_constant),
        };
        let inner = cjfeast::build_filter(bounds, a, b, choice).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.step.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.step.beta
    }

    /// Damped coefficients, constant term halved.
    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.combined.clone()
    }

    /// Filter value at a point of the mapped interval `[-1, 1]`.
    fn __call__(&self, x: f64) -> f64 {
        self.inner.evaluate(x)
    }

    /// Filter value at a singular value.
    fn at_sigma(&self, sigma: f64) -> f64 {
        self.inner.evaluate_sigma(sigma)
    }
}

#[pymodule]
fn pycjfeast(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySparseMatrix>()?;
    m.add_class::<PySolverOptions>()?;
    m.add_class::<PyTriplet>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyFilter>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(count, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
