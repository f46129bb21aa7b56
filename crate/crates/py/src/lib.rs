//! Python bindings: norms/LMO, libsvm parsing, schedules, and full runs.
//!
//! Run configs cross the boundary as JSON strings (the same format the CLI
//! accepts); traces come back as a list of per-row dicts.

use ndarray::Array1;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use lmopt::norms::{self, NormKind};
use lmopt::problems::{parse_libsvm as core_parse_libsvm, write_libsvm};
use lmopt::runner::{run as core_run, trace_to_csv, RunConfig};
use lmopt::schedules::{BetaRule, Schedule, ScheduleKind};

fn norm_kind(name: &str) -> PyResult<NormKind> {
    match name {
        "l2" | "euclidean" => Ok(NormKind::Euclidean),
        "linf" => Ok(NormKind::LInf),
        "l1" => Ok(NormKind::L1),
        other => Err(PyValueError::new_err(format!("unknown norm {other:?}"))),
    }
}

fn to_py_err(e: lmopt::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

#[pyfunction]
fn norm(kind: &str, x: Vec<f64>) -> PyResult<f64> {
    norms::norm(norm_kind(kind)?, &Array1::from_vec(x)).map_err(to_py_err)
}

#[pyfunction]
fn dual_norm(kind: &str, x: Vec<f64>) -> PyResult<f64> {
    norms::dual_norm(norm_kind(kind)?, &Array1::from_vec(x)).map_err(to_py_err)
}

#[pyfunction]
fn lmo(kind: &str, m: Vec<f64>, eta: f64) -> PyResult<Vec<f64>> {
    norms::lmo(norm_kind(kind)?, &Array1::from_vec(m), eta)
        .map(|v| v.to_vec())
        .map_err(to_py_err)
}

/// Parse libsvm text into (features, labels) as nested lists.
#[pyfunction]
fn parse_libsvm(py: Python<'_>, text: &str) -> PyResult<(Py<PyList>, Vec<f64>)> {
    let data = core_parse_libsvm(text, None).map_err(to_py_err)?;
    let rows = PyList::empty(py);
    for row in data.features.rows() {
        rows.append(row.to_vec())?;
    }
    Ok((rows.into(), data.labels.to_vec()))
}

/// Round-trip helper: serialize (features, labels) back to libsvm text.
#[pyfunction]
fn to_libsvm(features: Vec<Vec<f64>>, labels: Vec<f64>) -> PyResult<String> {
    let n = features.len();
    let d = features.first().map_or(0, |r| r.len());
    let flat: Vec<f64> = features.into_iter().flatten().collect();
    let features = ndarray::Array2::from_shape_vec((n, d), flat)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(write_libsvm(&lmopt::problems::Dataset {
        features,
        labels: Array1::from_vec(labels),
    }))
}

/// (alpha, eta, beta) at iteration k for the named experimental schedule.
#[pyfunction]
#[pyo3(signature = (kind, eta0, k, beta = None))]
fn schedule_coeffs(kind: &str, eta0: f64, k: usize, beta: Option<f64>) -> PyResult<(f64, f64, f64)> {
    let sk = match kind {
        "polyak-exp" => ScheduleKind::PolyakExp { eta0 },
        "igt-exp" => ScheduleKind::IgtExp { eta0 },
        "som-exp" => ScheduleKind::SomExp { eta0 },
        other => return Err(PyValueError::new_err(format!("unknown schedule {other:?}"))),
    };
    let rule = match beta {
        Some(c) => BetaRule::Constant(c),
        None => BetaRule::OneMinusAlpha,
    };
    let c = Schedule::experimental(sk, rule)
        .coeffs_at(k)
        .map_err(to_py_err)?;
    Ok((c.alpha, c.eta, c.beta))
}

/// Execute a run from a JSON config string; returns a list of row dicts.
#[pyfunction]
fn run_json(py: Python<'_>, config_json: &str) -> PyResult<Py<PyList>> {
    let config: RunConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let outcome = core_run(&config).map_err(to_py_err)?;
    if let Some(err) = outcome.diverged {
        return Err(PyRuntimeError::new_err(err.to_string()));
    }
    let rows = PyList::empty(py);
    for r in &outcome.trace.rows {
        let d = PyDict::new(py);
        d.set_item("k", r.k)?;
        d.set_item("loss", r.loss)?;
        d.set_item("grad_l2", r.grad_l2)?;
        d.set_item("grad_dual", r.grad_dual)?;
        d.set_item("mom_err", r.mom_err)?;
        d.set_item("step_norm", r.step_norm)?;
        d.set_item("runmin_loss", r.runmin_loss)?;
        d.set_item("runmin_grad", r.runmin_grad)?;
        rows.append(d)?;
    }
    Ok(rows.into())
}

/// Same run, but returns the trace CSV text (byte-identical to the CLI's).
#[pyfunction]
fn run_json_to_csv(config_json: &str) -> PyResult<String> {
    let config: RunConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let outcome = core_run(&config).map_err(to_py_err)?;
    Ok(trace_to_csv(&outcome.trace))
}

/// Run the verification battery; returns the JSON report as a string.
#[pyfunction]
#[pyo3(signature = (seed = 7))]
fn verify(seed: u64) -> PyResult<String> {
    let report = lmopt::verify::run_verification(seed).map_err(to_py_err)?;
    serde_json::to_string_pretty(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn lmopt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(norm, m)?)?;
    m.add_function(wrap_pyfunction!(dual_norm, m)?)?;
    m.add_function(wrap_pyfunction!(lmo, m)?)?;
    m.add_function(wrap_pyfunction!(parse_libsvm, m)?)?;
    m.add_function(wrap_pyfunction!(to_libsvm, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_coeffs, m)?)?;
    m.add_function(wrap_pyfunction!(run_json, m)?)?;
    m.add_function(wrap_pyfunction!(run_json_to_csv, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
