//! Python module `bergnorm`. Structured results come back as plain
//! dicts and lists; command runners return `(report_text, exit_code)`.

use bergnorm::bounds::{self, stirling_limit_probe};
use bergnorm::commands::{self, RunConfig, Suite};
use bergnorm::integrals::{self, IArgs};
use bergnorm::kernels::{KernelControl, KernelSeries};
use bergnorm::operators::{self, BracketConfig, Operator};
use bergnorm::params::Params as CoreParams;
use bergnorm::quadrature::RadialSplit;
use bergnorm::specfun::{self, Hyp2F1Args, SeriesControl};
use bergnorm::zonal;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyString};
use serde::Serialize;

fn err(e: bergnorm::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn value_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value;
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, value_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value_to_py(py, &v)
}

/// Problem parameters `(n, alpha, p, m)`; `m` defaults to the smallest
/// admissible order.
#[pyclass(name = "Params", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct Params {
    inner: CoreParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (n, alpha, p, m=None))]
    fn new(n: usize, alpha: f64, p: f64, m: Option<u32>) -> PyResult<Self> {
        let inner = match m {
            Some(m) => CoreParams::new(n, alpha, p, m),
            None => CoreParams::with_smallest_order(n, alpha, p),
        }
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[getter]
    fn m(&self) -> u32 {
        self.inner.m
    }

    #[getter]
    fn q(&self) -> f64 {
        self.inner.q()
    }

    fn is_besov_admissible(&self) -> bool {
        self.inner.is_besov_admissible()
    }

    fn __repr__(&self) -> String {
        let p = self.inner;
        format!("Params(n={}, alpha={}, p={}, m={})", p.n, p.alpha, p.p, p.m)
    }
}

#[pyfunction]
fn hyp2f1(a: f64, b: f64, c: f64, t: f64) -> PyResult<f64> {
    specfun::hyp2f1(&Hyp2F1Args::new(a, b, c, t).map_err(err)?, &SeriesControl::default()).map_err(err)
}

#[pyfunction]
fn hyp2f1_derivative(a: f64, b: f64, c: f64, t: f64) -> PyResult<f64> {
    specfun::hyp2f1_derivative(a, b, c, t, &SeriesControl::default()).map_err(err)
}

#[pyfunction]
fn gauss_value(a: f64, b: f64, c: f64) -> PyResult<f64> {
    specfun::gauss_value(a, b, c).map_err(err)
}

#[pyfunction]
fn dim_harmonic(n: usize, j: usize) -> u64 {
    zonal::dim_harmonic(n, j)
}

/// `Z_j(x, y)` for ball or sphere points of equal dimension.
#[pyfunction]
fn zonal_harmonic(j: usize, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(PyValueError::new_err("x and y need the same dimension n >= 2"));
    }
    Ok(zonal::zonal_pair(j, &x, &y))
}

#[pyfunction]
#[pyo3(signature = (params, x, y, degree_cap=200, rel_tol=1e-8))]
fn bergman_kernel(params: Params, x: Vec<f64>, y: Vec<f64>, degree_cap: usize, rel_tol: f64) -> PyResult<f64> {
    let series = KernelSeries::new(&params.inner, KernelControl::new(degree_cap, rel_tol).map_err(err)?);
    Ok(series.eval(&x, &y).map_err(err)?.value)
}

#[pyfunction]
fn i_closed_form(n: usize, alpha: f64, s: f64, x_abs: f64) -> PyResult<f64> {
    integrals::i_closed_form(n, &IArgs::new(alpha, s, x_abs).map_err(err)?, &SeriesControl::default()).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, alpha, s, x_abs, radial_order=64, sphere_order=24))]
fn i_quadrature(n: usize, alpha: f64, s: f64, x_abs: f64, radial_order: usize, sphere_order: usize) -> PyResult<f64> {
    let split = RadialSplit::new(radial_order, sphere_order).map_err(err)?;
    integrals::i_quadrature(n, &IArgs::new(alpha, s, x_abs).map_err(err)?, &split).map_err(err)
}

/// `(min, max)` of `I_{alpha,s}` over the ball.
#[pyfunction]
fn lemma1_constants(n: usize, alpha: f64, s: f64) -> PyResult<(f64, f64)> {
    let c = integrals::lemma1_constants(n, alpha, s).map_err(err)?;
    Ok((c.min, c.max))
}

/// Every named constant, displayed and proof-assembled.
#[pyfunction]
fn constants<'py>(py: Python<'py>, params: Params) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &commands::constant_set(&params.inner).map_err(err)?)
}

#[pyfunction]
fn stirling_probe<'py>(py: Python<'py>, n: usize, alpha: f64, m: u32, ps: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &stirling_limit_probe(n, alpha, m, &ps).map_err(err)?)
}

#[pyfunction]
fn multi_index_count(n: usize, m: u32) -> f64 {
    bounds::multi_index_count(n, m)
}

/// Norm bracket for `"T"` or `"P"`.
#[pyfunction]
#[pyo3(signature = (operator, params, trials=100, seed=operators::DEFAULT_SEED, radial_order=32, sphere_order=16))]
fn bracket<'py>(
    py: Python<'py>,
    operator: &str,
    params: Params,
    trials: usize,
    seed: u64,
    radial_order: usize,
    sphere_order: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let op: Operator = operator.parse().map_err(err)?;
    let split = RadialSplit::new(radial_order, sphere_order).map_err(err)?;
    let base = BracketConfig::default();
    let config = BracketConfig {
        trials,
        seed,
        outer: split,
        inner: split,
        sampler: bergnorm::kernels::SamplerConfig { seed, ..base.sampler },
        ..base
    };
    let b = py.detach(|| operators::bracket_norm(op, &params.inner, &config)).map_err(err)?;
    to_py(py, &b)
}

fn config_from(config: Option<&str>) -> PyResult<RunConfig> {
    match config {
        Some(s) => RunConfig::from_json(s).map_err(err),
        None => Ok(RunConfig::default()),
    }
}

/// Run a CLI command. `config` is a JSON run configuration; `arg` is the
/// suite for `verify` and the operator for `bracket`.
#[pyfunction]
#[pyo3(signature = (command, config=None, arg=None))]
fn run_command(py: Python<'_>, command: &str, config: Option<&str>, arg: Option<&str>) -> PyResult<(String, i32)> {
    let config = config_from(config)?;
    let need = |what: &str| arg.ok_or_else(|| PyValueError::new_err(format!("{command} needs {what}")));
    let out = match command {
        "constants" => py.detach(|| commands::cmd_constants(&config)),
        "audit" => py.detach(|| commands::cmd_audit(&config)),
        "verify" => {
            let suite: Suite = need("a suite")?.parse().map_err(err)?;
            py.detach(|| commands::cmd_verify(&config, suite))
        }
        "bracket" => {
            let op: Operator = need("an operator")?.parse().map_err(err)?;
            py.detach(|| commands::cmd_bracket(&config, op))
        }
        other => return Err(PyValueError::new_err(format!("unknown command '{other}'"))),
    }
    .map_err(err)?;
    Ok((out.body, out.exit_code))
}

#[pymodule(name = "bergnorm")]
fn bergnorm_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_function(wrap_pyfunction!(hyp2f1, m)?)?;
    m.add_function(wrap_pyfunction!(hyp2f1_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_value, m)?)?;
    m.add_function(wrap_pyfunction!(dim_harmonic, m)?)?;
    m.add_function(wrap_pyfunction!(zonal_harmonic, m)?)?;
    m.add_function(wrap_pyfunction!(bergman_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(i_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(i_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_constants, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(stirling_probe, m)?)?;
    m.add_function(wrap_pyfunction!(multi_index_count, m)?)?;
    m.add_function(wrap_pyfunction!(bracket, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
