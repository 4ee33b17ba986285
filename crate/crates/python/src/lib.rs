//! Python bindings: marginals, link polynomials, pair and matrix solves,
//! and the bisection and Monte-Carlo references.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use link_core::baselines::{bisection_auto, mc_estimate as mc};
use link_core::matrix::map_correlation_matrix;
use link_core::{
    build_link as build, make_builtin, select_degree as select, solve_rho_z, BuildOptions, Builtin,
    DegreeOptions, DiscreteMarginal, Error, MarginalSpec, PairOptions,
};

create_exception!(
    nataf_link,
    InfeasibleError,
    PyValueError,
    "Target correlation outside the feasible range."
);

fn err(e: Error) -> PyErr {
    match e {
        Error::Infeasible { rho_x, lo, hi } => InfeasibleError::new_err((
            format!("rho_x = {rho_x} is outside the feasible range [{lo}, {hi}]"),
            lo,
            hi,
        )),
        other if other.is_infeasible() => InfeasibleError::new_err(other.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Marginal", module = "nataf_link", frozen, from_py_object)]
#[derive(Clone)]
struct PyMarginal(link_core::Marginal);

#[pymethods]
impl PyMarginal {
    /// Builds a marginal from a JSON spec string, e.g. '{"dist": "beta", "params": {"alpha": 2, "beta": 3}}'.
    #[staticmethod]
    fn from_json(spec: &str) -> PyResult<Self> {
        let s: MarginalSpec =
            serde_json::from_str(spec).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self(s.build().map_err(err)?))
    }

    #[staticmethod]
    fn uniform01() -> Self {
        Self(make_builtin(Builtin::Uniform01).expect("builtin"))
    }

    #[staticmethod]
    fn normal01() -> Self {
        Self(make_builtin(Builtin::Normal01).expect("builtin"))
    }

    #[staticmethod]
    fn bernoulli_half() -> Self {
        Self(make_builtin(Builtin::BernoulliHalf).expect("builtin"))
    }

    #[staticmethod]
    #[pyo3(signature = (mu = 0.0, sigma = 1.0))]
    fn lognormal(mu: f64, sigma: f64) -> PyResult<Self> {
        make_builtin(Builtin::LogNormal { mu, sigma })
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn beta(alpha: f64, beta: f64) -> PyResult<Self> {
        make_builtin(Builtin::Beta { alpha, beta })
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn binomial(n: u32, p: f64) -> PyResult<Self> {
        make_builtin(Builtin::Binomial { n, p })
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn poisson(lam: f64) -> PyResult<Self> {
        make_builtin(Builtin::Poisson { lambda: lam })
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (support, probs, name = "discrete".to_string()))]
    fn discrete(support: Vec<f64>, probs: Vec<f64>, name: String) -> PyResult<Self> {
        DiscreteMarginal::new(name, support, probs)
            .map(|d| Self(d.into()))
            .map_err(err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    #[getter]
    fn std(&self) -> f64 {
        self.0.std()
    }

    #[getter]
    fn is_discrete(&self) -> bool {
        self.0.as_discrete().is_some()
    }

    /// x = F⁻¹(Φ(z)).
    fn transform(&self, z: f64) -> f64 {
        self.0.transform(z)
    }

    fn __repr__(&self) -> String {
        format!("Marginal({})", self.0.name())
    }
}

#[pyclass(
    name = "LinkPolynomial",
    module = "nataf_link",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PyLink(link_core::LinkPolynomial);

#[pymethods]
impl PyLink {
    #[new]
    fn new(coefficients: Vec<f64>) -> PyResult<Self> {
        link_core::LinkPolynomial::from_coefficients(coefficients)
            .map(Self)
            .map_err(err)
    }

    /// Coefficients b_0..b_n in ascending powers of rho_z.
    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.0.b.clone()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.0.warnings().to_vec()
    }

    fn evaluate(&self, rho_z: f64) -> f64 {
        self.0.evaluate(rho_z)
    }

    fn derivative(&self, rho_z: f64) -> f64 {
        self.0.derivative(rho_z)
    }

    fn feasible_range(&self) -> (f64, f64) {
        link_core::feasible_range(&self.0)
    }

    /// rho_z with P(rho_z) = rho_x on the monotone branch.
    #[pyo3(signature = (rho_x, tol = 1e-12))]
    fn solve(&self, rho_x: f64, tol: f64) -> PyResult<f64> {
        solve_rho_z(&self.0, rho_x, tol)
            .map(|r| r.rho_z)
            .map_err(err)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("serializable")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(Self)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __call__(&self, rho_z: f64) -> f64 {
        self.0.evaluate(rho_z)
    }

    fn __repr__(&self) -> String {
        format!("LinkPolynomial(degree={})", self.0.degree())
    }
}

/// Degree-n link for a pair; `n_plus_one` uses (n+1)-point rules without analytic shortcuts.
#[pyfunction]
#[pyo3(signature = (mi, mj, degree, n_plus_one = false))]
fn build_link(
    mi: &PyMarginal,
    mj: &PyMarginal,
    degree: usize,
    n_plus_one: bool,
) -> PyResult<PyLink> {
    let opts = if n_plus_one {
        BuildOptions::n_plus_one()
    } else {
        BuildOptions::default()
    };
    build(&mi.0, &mj.0, degree, &opts).map(PyLink).map_err(err)
}

/// Returns (polynomial, degree, capped, trace of (j, delta_P_j)).
#[pyfunction]
#[pyo3(signature = (mi, mj, delta = 1e-4, step = 2, cap = 39))]
fn select_degree(
    mi: &PyMarginal,
    mj: &PyMarginal,
    delta: f64,
    step: usize,
    cap: usize,
) -> PyResult<(PyLink, usize, bool, Vec<(usize, f64)>)> {
    let opts = DegreeOptions {
        delta,
        step,
        cap,
        ..Default::default()
    };
    let sel = select(&mi.0, &mj.0, &opts).map_err(err)?;
    Ok((PyLink(sel.polynomial), sel.degree, sel.capped, sel.trace))
}

/// Solves rho_z for one pair; returns a dict with rho_z, residual, feasible_range, method.
#[pyfunction]
#[pyo3(signature = (mi, mj, rho_x, degree = None, closed_form = true))]
fn solve<'py>(
    py: Python<'py>,
    mi: &PyMarginal,
    mj: &PyMarginal,
    rho_x: f64,
    degree: Option<usize>,
    closed_form: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let opts = PairOptions {
        degree,
        closed_form,
        ..Default::default()
    };
    let r = link_core::solve_pair(&mi.0, &mj.0, rho_x, &opts).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rho_z", r.rho_z)?;
    d.set_item("residual", r.residual)?;
    d.set_item("feasible_range", r.feasible_range)?;
    d.set_item(
        "method",
        serde_json::to_value(r.method)
            .expect("enum")
            .as_str()
            .unwrap_or_default(),
    )?;
    d.set_item("warnings", r.warnings)?;
    Ok(d)
}

/// Maps R_X to R_Z; returns a dict with R_Z, repaired, max_perturbation, min_eigenvalue.
#[pyfunction]
#[pyo3(signature = (marginals, r_x, closed_form = true))]
fn map_matrix<'py>(
    py: Python<'py>,
    marginals: Vec<PyMarginal>,
    r_x: Vec<Vec<f64>>,
    closed_form: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let ms: Vec<_> = marginals.into_iter().map(|m| m.0).collect();
    let opts = PairOptions {
        closed_form,
        ..Default::default()
    };
    let rep = py
        .detach(|| map_correlation_matrix(&ms, &r_x, &opts))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("R_Z", PyList::new(py, rep.r_z)?)?;
    d.set_item("repaired", rep.repaired)?;
    d.set_item("max_perturbation", rep.max_perturbation)?;
    d.set_item("min_eigenvalue", rep.min_eigenvalue)?;
    Ok(d)
}

/// Bisection on the direct link integral; returns (rho_z, quantile_calls, bivariate_cdf_calls).
#[pyfunction]
#[pyo3(signature = (mi, mj, rho_x, epsilon = 1e-3))]
fn bisection(
    mi: &PyMarginal,
    mj: &PyMarginal,
    rho_x: f64,
    epsilon: f64,
) -> PyResult<(f64, u64, u64)> {
    let r = bisection_auto(&mi.0, &mj.0, rho_x, epsilon).map_err(err)?;
    Ok((
        r.rho_z,
        r.counters.quantile_calls,
        r.counters.bivariate_cdf_calls,
    ))
}

/// Sample correlation after transforming correlated normals; returns (rho_hat, std_error).
#[pyfunction]
#[pyo3(signature = (mi, mj, rho_z, n_samples = 1_000_000, seed = 0))]
fn mc_estimate(
    py: Python<'_>,
    mi: &PyMarginal,
    mj: &PyMarginal,
    rho_z: f64,
    n_samples: u64,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let r = py
        .detach(|| mc(&mi.0, &mj.0, rho_z, n_samples, seed))
        .map_err(err)?;
    Ok((r.rho_hat, r.std_error))
}

#[pymodule]
fn nataf_link(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarginal>()?;
    m.add_class::<PyLink>()?;
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_function(wrap_pyfunction!(build_link, m)?)?;
    m.add_function(wrap_pyfunction!(select_degree, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(map_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(bisection, m)?)?;
    m.add_function(wrap_pyfunction!(mc_estimate, m)?)?;
    Ok(())
}
