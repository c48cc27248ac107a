//! Python bindings. Reports come back as plain dicts with the same fields
//! as the JSON the command-line tool writes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use contpid::estimator::{train_unique, EstimatorConfig};
use contpid::oracle::{discrete_broja, gaussian_unique_exact_with, DiscreteJoint};
use contpid::pid::{consistency_check, decompose as pid_decompose, Units};
use contpid::pseudoobs::{pseudo_observations, Dataset};
use contpid::simgen::{gen_gaussian_triple, gen_model, GaussianTriple, ModelKind, ModelSpec};

fn err(e: contpid::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyDict>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))?.cast_into::<PyDict>().map_err(Into::into)
}

fn units(name: &str) -> PyResult<Units> {
    name.parse().map_err(err)
}

#[allow(clippy::too_many_arguments)]
fn config(
    inner_samples: usize,
    batch_size: usize,
    iterations: usize,
    learning_rate: f64,
    window: usize,
    seed: u64,
) -> EstimatorConfig {
    EstimatorConfig {
        inner_samples,
        batch_size,
        iterations,
        learning_rate,
        window,
        seed,
        ..EstimatorConfig::default()
    }
}

/// Full decomposition of three equally long sequences.
#[pyfunction]
#[pyo3(signature = (y, x1, x2, *, inner_samples=50, batch_size=128, iterations=1200, learning_rate=1e-2, window=100, seed=0, units="nats", direct_u2=false))]
#[allow(clippy::too_many_arguments)]
fn decompose<'py>(
    py: Python<'py>,
    y: Vec<f64>,
    x1: Vec<f64>,
    x2: Vec<f64>,
    inner_samples: usize,
    batch_size: usize,
    iterations: usize,
    learning_rate: f64,
    window: usize,
    seed: u64,
    units: &str,
    direct_u2: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let u = self::units(units)?;
    let cfg = config(inner_samples, batch_size, iterations, learning_rate, window, seed);
    let data = Dataset::new(y, x1, x2).map_err(err)?;
    let (report, direct) = py
        .detach(|| {
            if direct_u2 {
                consistency_check(&data, &cfg).map(|c| (c.report, Some(c.u2_direct)))
            } else {
                pid_decompose(&data, &cfg).map(|d| (d.report, None))
            }
        })
        .map_err(err)?;
    let out = to_dict(py, &report.in_units(u))?;
    out.set_item("u2_direct", direct.map(|v| v * u.scale()))?;
    Ok(out)
}

/// The unique information of x1 about y (nats), without the other terms.
#[pyfunction]
#[pyo3(signature = (y, x1, x2, *, inner_samples=50, batch_size=128, iterations=1200, learning_rate=1e-2, window=100, seed=0))]
#[allow(clippy::too_many_arguments)]
fn unique_information(
    py: Python<'_>,
    y: Vec<f64>,
    x1: Vec<f64>,
    x2: Vec<f64>,
    inner_samples: usize,
    batch_size: usize,
    iterations: usize,
    learning_rate: f64,
    window: usize,
    seed: u64,
) -> PyResult<f64> {
    let cfg = config(inner_samples, batch_size, iterations, learning_rate, window, seed);
    let data = Dataset::new(y, x1, x2).map_err(err)?;
    py.detach(|| pseudo_observations(&data).and_then(|p| train_unique(&p, &cfg)))
        .map(|f| f.estimate)
        .map_err(err)
}

/// Closed-form unique information of a Gaussian triple (nats).
#[pyfunction]
#[pyo3(signature = (rho_y1, rho_y2, compare_abs=false))]
fn gaussian_unique_exact(rho_y1: f64, rho_y2: f64, compare_abs: bool) -> f64 {
    gaussian_unique_exact_with(rho_y1, rho_y2, compare_abs)
}

/// Discrete decomposition of a table `p[y][x1][x2]`.
#[pyfunction]
#[pyo3(signature = (table, units="bits"))]
fn discrete_pid<'py>(py: Python<'py>, table: Vec<Vec<Vec<f64>>>, units: &str) -> PyResult<Bound<'py, PyDict>> {
    let ny = table.len();
    let n1 = table.first().map_or(0, Vec::len);
    let n2 = table.first().and_then(|t| t.first()).map_or(0, Vec::len);
    if table.iter().any(|s| s.len() != n1 || s.iter().any(|r| r.len() != n2)) {
        return Err(PyValueError::new_err("table must be rectangular"));
    }
    let flat: Vec<f64> = table.into_iter().flatten().flatten().collect();
    let p = DiscreteJoint::new(ny, n1, n2, flat).map_err(err)?;
    let rep = discrete_broja(&p).map_err(err)?.in_units(self::units(units)?);
    to_dict(py, &rep)
}

/// Samples (y, x1, x2) of a standard Gaussian triple.
#[pyfunction]
fn gaussian_triple(rho_y1: f64, rho_y2: f64, rho_12: f64, samples: usize, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let t = GaussianTriple::new(rho_y1, rho_y2, rho_12).map_err(err)?;
    let d = gen_gaussian_triple(&t, samples, seed).map_err(err)?;
    Ok((d.y, d.x1, d.x2))
}

/// Samples (y, x1, x2) of the model "m1" or "m2".
#[pyfunction]
fn model_samples(
    model: &str,
    w1: f64,
    w2: f64,
    rho12: f64,
    samples: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let kind: ModelKind = model.parse().map_err(err)?;
    let d = gen_model(&ModelSpec {
        kind,
        w1,
        w2,
        rho12,
        samples,
        seed,
    })
    .map_err(err)?;
    Ok((d.y, d.x1, d.x2))
}

#[pymodule]
fn contpid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(unique_information, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_unique_exact, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_pid, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_triple, m)?)?;
    m.add_function(wrap_pyfunction!(model_samples, m)?)?;
    Ok(())
}
