//! Python module `screening_arm`.
//!
//! Designs are passed as lists of rows of -1/+1 integers and responses as
//! lists of floats. Results come back as plain dicts and lists.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use screening_core::gds::{gds_all_2fi, gds_main_effects};
use screening_core::io::plackett_burman_columns;
use screening_core::simulate::run_simulation;
use screening_core::{default_config, gds_arm, Design, GdsArmConfig, Heredity, Method, Scenario, ScreeningError, ScreeningResult};

fn to_py(err: ScreeningError) -> PyErr {
    if err.is_numerical() {
        PyArithmeticError::new_err(err.to_string())
    } else {
        PyValueError::new_err(err.to_string())
    }
}

fn parse_heredity(s: &str) -> PyResult<Heredity> {
    match s {
        "none" => Ok(Heredity::None),
        "weak" => Ok(Heredity::Weak),
        "strong" => Ok(Heredity::Strong),
        other => Err(PyValueError::new_err(format!("heredity must be none, weak or strong, got {other:?}"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn arm_config(
    design: &Design,
    seed: u64,
    heredity: &str,
    nrep: Option<usize>,
    nint: Option<usize>,
    ntop: Option<usize>,
    pkeep: Option<f64>,
) -> PyResult<GdsArmConfig> {
    let base = default_config(design.runs(), design.factors(), seed).map_err(to_py)?;
    let mut cfg = GdsArmConfig {
        nrep: nrep.unwrap_or(base.nrep),
        nint: nint.unwrap_or(base.nint),
        ntop: ntop.unwrap_or(base.ntop),
        pkeep: pkeep.unwrap_or(base.pkeep),
        heredity: parse_heredity(heredity)?,
        ..base
    };
    if nrep.is_some() && ntop.is_none() {
        cfg.ntop = cfg.ntop.min(cfg.nrep);
    }
    cfg.validate(design.factors()).map_err(to_py)?;
    Ok(cfg)
}

fn method_from_name(name: &str, arm: GdsArmConfig) -> PyResult<Method> {
    match name {
        "gds-m" => Ok(Method::GdsMain),
        "gds-m2fi" => Ok(Method::GdsAll2fi),
        "gds-arm" => Ok(Method::GdsArm(arm)),
        other => Err(unknown_method(other)),
    }
}

fn unknown_method(name: &str) -> PyErr {
    PyValueError::new_err(format!("method must be gds-m, gds-m2fi or gds-arm, got {name:?}"))
}

fn build_design(rows: Vec<Vec<i8>>, names: Option<Vec<String>>) -> PyResult<Design> {
    Design::new(rows, names).map_err(to_py)
}

fn result_dict<'py>(py: Python<'py>, design: &Design, method: &str, res: &ScreeningResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("method", method)?;
    let effects: Vec<String> = res.active_effects.iter().map(|e| design.label(e)).collect();
    d.set_item("active_effects", effects.clone())?;
    let factors: Vec<String> = res.important_factors.iter().map(|&i| design.names()[i].clone()).collect();
    d.set_item("important_factors", factors)?;
    let coefs = PyDict::new(py);
    for (name, b) in effects.iter().zip(&res.final_fit.coefficients) {
        coefs.set_item(name, *b)?;
    }
    d.set_item("coefficients", coefs)?;
    d.set_item("r_squared", res.final_fit.r_squared())?;
    d.set_item("bic", res.final_fit.bic())?;
    Ok(d)
}

/// The first `factors` columns of the 12-run Plackett-Burman design.
#[pyfunction]
#[pyo3(signature = (factors = 11))]
fn make_pb12(factors: usize) -> PyResult<Vec<Vec<i8>>> {
    let d = plackett_burman_columns(12, factors).map_err(to_py)?;
    Ok((0..d.runs()).map(|r| d.row(r).to_vec()).collect())
}

/// Screens one response. `method` is "gds-m", "gds-m2fi" or "gds-arm".
#[pyfunction]
#[pyo3(signature = (design, response, method = "gds-arm", seed = 0, heredity = "none", nrep = None, nint = None, ntop = None, pkeep = None, names = None))]
#[allow(clippy::too_many_arguments)]
fn analyze<'py>(
    py: Python<'py>,
    design: Vec<Vec<i8>>,
    response: Vec<f64>,
    method: &str,
    seed: u64,
    heredity: &str,
    nrep: Option<usize>,
    nint: Option<usize>,
    ntop: Option<usize>,
    pkeep: Option<f64>,
    names: Option<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    let design = build_design(design, names)?;
    if response.len() != design.runs() {
        return Err(PyValueError::new_err(format!(
            "response has {} values but the design has {} runs",
            response.len(),
            design.runs()
        )));
    }
    let res = match method {
        "gds-m" => gds_main_effects(&design, &response),
        "gds-m2fi" => gds_all_2fi(&design, &response),
        "gds-arm" => {
            let cfg = arm_config(&design, seed, heredity, nrep, nint, ntop, pkeep)?;
            py.detach(|| gds_arm(&design, &response, &cfg))
        }
        other => return Err(unknown_method(other)),
    }
    .map_err(to_py)?;
    result_dict(py, &design, method, &res)
}

/// Runs the simulation protocol; returns one dict per scenario and method.
#[pyfunction]
#[pyo3(signature = (design, scenarios = vec![1, 2, 3, 4, 5, 6, 7], methods = vec!["gds-m".to_string(), "gds-m2fi".to_string(), "gds-arm".to_string()], iterations = 100, seed = 0, heredity = "none"))]
fn simulate<'py>(
    py: Python<'py>,
    design: Vec<Vec<i8>>,
    scenarios: Vec<usize>,
    methods: Vec<String>,
    iterations: usize,
    seed: u64,
    heredity: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let design = build_design(design, None)?;
    let arm = arm_config(&design, seed, heredity, None, None, None, None)?;
    let scenarios = scenarios
        .into_iter()
        .map(Scenario::standard)
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    let methods = methods
        .iter()
        .map(|m| method_from_name(m, arm))
        .collect::<PyResult<Vec<_>>>()?;
    let rows = py
        .detach(|| run_simulation(&design, &scenarios, &methods, iterations, seed))
        .map_err(to_py)?;
    rows.iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("scenario", &r.scenario)?;
            d.set_item("method", &r.method)?;
            d.set_item("power", r.power)?;
            d.set_item("error", r.error)?;
            d.set_item("iterations", r.iterations)?;
            d.set_item("failures", r.failures)?;
            d.set_item("seed", r.seed)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn screening_arm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(make_pb12, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
