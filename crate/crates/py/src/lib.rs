//! Python bindings: entropic quantities on dense matrices and seeded
//! campaign runs returning the JSON report.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use qrecover::campaign::{self, CampaignConfig, Suite};
use qrecover::linalg::{CMat, C64};

fn py_err(e: qrecover::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Square complex matrix from nested rows.
fn matrix(rows: Vec<Vec<C64>>) -> PyResult<CMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

/// Von Neumann entropy in bits.
#[pyfunction]
fn entropy(rho: Vec<Vec<C64>>) -> PyResult<f64> {
    qrecover::entropy::entropy(&matrix(rho)?).map_err(py_err)
}

/// `D(rho||sigma)` in bits; `inf` when the support condition fails.
#[pyfunction]
fn relative_entropy(rho: Vec<Vec<C64>>, sigma: Vec<Vec<C64>>) -> PyResult<f64> {
    Ok(qrecover::entropy::rel_entropy(&matrix(rho)?, &matrix(sigma)?)
        .map_err(py_err)?
        .bits)
}

#[pyfunction]
fn fidelity(rho: Vec<Vec<C64>>, sigma: Vec<Vec<C64>>) -> PyResult<f64> {
    qrecover::entropy::fidelity(&matrix(rho)?, &matrix(sigma)?).map_err(py_err)
}

/// Run one suite and return the report as JSON text.
#[pyfunction]
#[pyo3(signature = (suite, seed=None, trials=None, dims=None, tol=None))]
fn run_suite(
    py: Python<'_>,
    suite: &str,
    seed: Option<u64>,
    trials: Option<u64>,
    dims: Option<Vec<usize>>,
    tol: Option<f64>,
) -> PyResult<String> {
    let suite: Suite = suite.parse().map_err(py_err)?;
    let mut cfg = CampaignConfig {
        suites: vec![suite],
        trials,
        dims,
        tol,
        ..CampaignConfig::default()
    };
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    py.detach(|| campaign::run(&cfg).and_then(|(report, _)| report.to_json()))
        .map_err(py_err)
}

/// Run a campaign described by a JSON config and return the JSON report.
#[pyfunction]
fn run_config(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = CampaignConfig::from_json(config_json).map_err(py_err)?;
    py.detach(|| campaign::run(&cfg).and_then(|(report, _)| report.to_json()))
        .map_err(py_err)
}

#[pymodule]
fn qrecover_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA_VERSION", campaign::SCHEMA_VERSION)?;
    m.add(
        "SUITES",
        Suite::ALL.iter().map(|s| s.name()).collect::<Vec<_>>(),
    )?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(relative_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    Ok(())
}
