//! Python module `dp_tradeoff`.

use dp_core::instance;
use dp_core::verify::uniform_grid;
use dp_core::{
    analyze, closed_form_report, cross_verify, curve_by_sweep, curve_by_vertices, estimator_on_curve, solve_dp_at,
    CurveReport, DistortionMatrix, DpError, Distribution, Estimator, Form, GroundMetric, JointChannel, Matrix,
    SweepOptions, VerifyOptions,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(dp_tradeoff, BudgetExceededError, PyRuntimeError, "A computation exceeded its size budget.");

fn to_py(e: DpError) -> PyErr {
    match e {
        DpError::BudgetExceeded(m) => BudgetExceededError::new_err(m),
        DpError::Lp(_) | DpError::Internal(_) | DpError::NoFeasibleGridPoint(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(to_py)
}

fn parse_form(form: &str) -> PyResult<Form> {
    form.parse().map_err(|_| PyValueError::new_err(format!("form must be 'ot' or 'tv', got {form:?}")))
}

/// A validated problem: joint pmf `p_xy[x][y]`, distortion and ground
/// metric (both Hamming by default).
#[pyclass(module = "dp_tradeoff", name = "Problem")]
struct PyProblem {
    inner: dp_core::Problem,
}

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (p_xy, distortion=None, metric=None))]
    fn new(p_xy: Vec<Vec<f64>>, distortion: Option<Vec<Vec<f64>>>, metric: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let channel = JointChannel::new(matrix(p_xy)?).map_err(to_py)?;
        let n = channel.n_x();
        let d = match distortion {
            Some(rows) => DistortionMatrix::new(matrix(rows)?).map_err(to_py)?,
            None => DistortionMatrix::hamming(n),
        };
        let h = match metric {
            Some(rows) => GroundMetric::new(matrix(rows)?).map_err(to_py)?,
            None => GroundMetric::hamming(n),
        };
        Ok(Self { inner: dp_core::Problem::new(channel, d, h).map_err(to_py)? })
    }

    /// Seeded random instance with Hamming metric.
    #[staticmethod]
    #[pyo3(signature = (seed, n_x, n_y, random_distortion=false))]
    fn random(seed: u64, n_x: usize, n_y: usize, random_distortion: bool) -> PyResult<Self> {
        Ok(Self { inner: instance::random_problem(seed, n_x, n_y, random_distortion).map_err(to_py)? })
    }

    #[getter]
    fn n_x(&self) -> usize {
        self.inner.n_x()
    }

    #[getter]
    fn n_y(&self) -> usize {
        self.inner.n_y()
    }

    #[getter]
    fn p_x(&self) -> Vec<f64> {
        self.inner.p_x().to_vec()
    }

    #[getter]
    fn p_y(&self) -> Vec<f64> {
        self.inner.p_y().to_vec()
    }

    #[getter]
    fn d_star(&self) -> f64 {
        self.inner.d_star()
    }

    #[getter]
    fn rho(&self) -> Vec<Vec<f64>> {
        self.inner.rho().to_rows()
    }

    fn greedy_estimator(&self) -> Vec<Vec<f64>> {
        self.inner.greedy_estimator().matrix().to_rows()
    }

    fn posterior_sampling(&self) -> Vec<Vec<f64>> {
        dp_core::posterior_sampling(self.inner.channel()).matrix().to_rows()
    }

    fn expected_distortion(&self, q: Vec<Vec<f64>>) -> PyResult<f64> {
        let q = Estimator::new(matrix(q)?).map_err(to_py)?;
        self.inner.expected_distortion(&q).map_err(to_py)
    }

    /// `W1(P_X, Q P_Y)` under the problem's metric.
    fn perception(&self, q: Vec<Vec<f64>>) -> PyResult<f64> {
        let q = Estimator::new(matrix(q)?).map_err(to_py)?;
        self.inner.perception(&q).map_err(to_py)
    }

    /// `D(P)` with an optimal estimator and dual certificate.
    #[pyo3(signature = (p, form="ot"))]
    fn solve(&self, py: Python<'_>, p: f64, form: &str) -> PyResult<PySolveReport> {
        let form = parse_form(form)?;
        let rep = py.detach(|| solve_dp_at(&self.inner, p, form)).map_err(to_py)?;
        Ok(PySolveReport { inner: rep })
    }

    /// The whole curve; `method` is `"vertex"`, `"sweep"` or `"closed-form"`.
    #[pyo3(signature = (method="sweep"))]
    fn curve(&self, py: Python<'_>, method: &str) -> PyResult<PyCurve> {
        let problem = &self.inner;
        let report = py.detach(|| match method {
            "vertex" => Ok(curve_by_vertices(problem)),
            "sweep" => Ok(curve_by_sweep(problem, &SweepOptions::default())),
            "closed-form" => Ok(closed_form_report(problem)),
            other => Err(other.to_string()),
        });
        let report = report
            .map_err(|m| PyValueError::new_err(format!("unknown method {m:?}")))?
            .map_err(to_py)?;
        Ok(PyCurve { problem: problem.clone(), report })
    }

    /// Closed-form analysis of a binary source.
    fn binary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let a = analyze(&self.inner).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("case", format!("{:?}", a.case))?;
        d.set_item("u", a.u.clone())?;
        d.set_item("order", a.order.clone())?;
        d.set_item("breakpoints", a.breakpoints.clone())?;
        d.set_item("slopes", a.slopes.clone())?;
        d.set_item("d_star", a.d_star)?;
        Ok(d)
    }

    /// Cross-checks every applicable method on `grid` uniform levels.
    #[pyo3(signature = (grid=11, grid_steps=200, tol=1e-8, inject_fault=false))]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        grid: usize,
        grid_steps: usize,
        tol: f64,
        inject_fault: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let opts = VerifyOptions {
            exact_tol: tol,
            grid_steps: (grid_steps > 0).then_some(grid_steps),
            inject_fault,
            ..Default::default()
        };
        let levels = uniform_grid(grid.max(2));
        let rep = py.detach(|| cross_verify(&self.inner, &levels, &opts)).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("pass", rep.pass)?;
        d.set_item("methods", rep.methods)?;
        d.set_item("skipped", rep.skipped)?;
        d.set_item("max_discrepancy", rep.max_discrepancy)?;
        d.set_item("failures", rep.failures)?;
        d.set_item("levels", rep.rows.iter().map(|r| r.p).collect::<Vec<_>>())?;
        d.set_item("values", rep.rows.iter().map(|r| r.lp).collect::<Vec<_>>())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Problem(n_x={}, n_y={}, d_star={})", self.inner.n_x(), self.inner.n_y(), self.inner.d_star())
    }
}

#[pyclass(module = "dp_tradeoff", name = "SolveReport")]
struct PySolveReport {
    inner: dp_core::SolveReport,
}

#[pymethods]
impl PySolveReport {
    #[getter]
    fn p(&self) -> f64 {
        self.inner.p_level
    }

    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn gap(&self) -> f64 {
        self.inner.gap
    }

    #[getter]
    fn form(&self) -> &'static str {
        match self.inner.form {
            Form::Ot => "ot",
            Form::Tv => "tv",
        }
    }

    #[getter]
    fn estimator(&self) -> Vec<Vec<f64>> {
        self.inner.estimator.matrix().to_rows()
    }

    #[getter]
    fn coupling(&self) -> Vec<Vec<f64>> {
        self.inner.coupling.matrix().to_rows()
    }

    /// Dual variables `w, r, nu, l` and the dual objective.
    #[getter]
    fn dual<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let dual = &self.inner.dual;
        let d = PyDict::new(py);
        d.set_item("w", dual.w.clone())?;
        d.set_item("r", dual.r.clone())?;
        d.set_item("nu", dual.nu.clone())?;
        d.set_item("l", dual.l)?;
        d.set_item("objective", dual.objective)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("SolveReport(p={}, value={}, gap={:e})", self.inner.p_level, self.inner.value, self.inner.gap)
    }
}

#[pyclass(module = "dp_tradeoff", name = "Curve")]
struct PyCurve {
    problem: dp_core::Problem,
    report: CurveReport,
}

#[pymethods]
impl PyCurve {
    #[getter]
    fn method(&self) -> String {
        format!("{:?}", self.report.method)
    }

    #[getter]
    fn breakpoints(&self) -> Vec<f64> {
        self.report.curve.breakpoints().to_vec()
    }

    /// Slope of every segment, the plateau last.
    #[getter]
    fn slopes(&self) -> Vec<f64> {
        self.report.curve.slopes()
    }

    #[getter]
    fn p_star(&self) -> f64 {
        self.report.curve.p_star()
    }

    #[getter]
    fn d_star(&self) -> f64 {
        self.report.curve.d_star()
    }

    /// Projected dual points as `(p0, p1)` pairs.
    #[getter]
    fn s2_points(&self) -> Vec<(f64, f64)> {
        self.report.s2_points.iter().map(|p| (p.p0, p.p1)).collect()
    }

    #[getter]
    fn hull_extremes(&self) -> Vec<usize> {
        self.report.hull_extremes.clone()
    }

    fn value(&self, p: f64) -> f64 {
        self.report.curve.value(p)
    }

    fn slope(&self, p: f64) -> f64 {
        self.report.curve.slope(p)
    }

    /// An estimator achieving `(p, D(p))`.
    fn estimator(&self, p: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(estimator_on_curve(&self.problem, &self.report, p).map_err(to_py)?.matrix().to_rows())
    }

    fn __repr__(&self) -> String {
        format!(
            "Curve(method={:?}, breakpoints={:?}, d_star={})",
            self.report.method,
            self.report.curve.breakpoints(),
            self.report.curve.d_star()
        )
    }
}

fn distributions(p: Vec<f64>, q: Vec<f64>) -> PyResult<(Distribution, Distribution)> {
    Ok((Distribution::new(p).map_err(to_py)?, Distribution::new(q).map_err(to_py)?))
}

/// `(W1, coupling)` under `metric` (Hamming by default).
#[pyfunction]
#[pyo3(signature = (p, q, metric=None))]
fn wasserstein1(p: Vec<f64>, q: Vec<f64>, metric: Option<Vec<Vec<f64>>>) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let (p, q) = distributions(p, q)?;
    let h = match metric {
        Some(rows) => GroundMetric::new(matrix(rows)?).map_err(to_py)?,
        None => GroundMetric::hamming(p.len()),
    };
    let (value, coupling) = dp_core::wasserstein1(&p, &q, &h).map_err(to_py)?;
    Ok((value, coupling.matrix().to_rows()))
}

#[pyfunction]
fn tv_distance(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let (p, q) = distributions(p, q)?;
    dp_core::tv_distance(&p, &q).map_err(to_py)
}

#[pymodule]
fn dp_tradeoff(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolveReport>()?;
    m.add_class::<PyCurve>()?;
    m.add_function(wrap_pyfunction!(wasserstein1, m)?)?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add("BudgetExceededError", m.py().get_type::<BudgetExceededError>())?;
    Ok(())
}
