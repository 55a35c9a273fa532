//! Python bindings: configuration, simulation runs, the consistency sweep
//! and the verification checks.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fpsi::assembly::{Discretization, Forcing};
use fpsi::consistency::sweep::{delta_sweep as run_sweep, SweepConfig};
use fpsi::consistency::{build_reference, check_reference_residuals, ReferenceAmplitudes, ReferenceKind};
use fpsi::io::{csv, parse_config, serialize_config, RunConfig};
use fpsi::regularizer::{convolution_rate_report, rate_test_field};
use fpsi::scheme::{check_global_energy_inequality, Simulation};
use fpsi::{FpsiError, Verdict};

create_exception!(fpsi_py, ConfigError, PyValueError);
create_exception!(fpsi_py, DegeneracyError, PyRuntimeError);

fn to_py(e: FpsiError) -> PyErr {
    match e {
        FpsiError::Config { .. } => ConfigError::new_err(e.to_string()),
        FpsiError::Degeneracy { .. } => DegeneracyError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Validated run configuration.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    /// Parse flat `key = value` text.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyConfig {
            inner: parse_config(text).map_err(to_py)?,
        })
    }

    /// Copy with one key replaced, validated like a parsed file.
    fn with_value(&self, key: &str, value: &str) -> PyResult<Self> {
        let mut found = false;
        let mut text: String = serialize_config(&self.inner)
            .lines()
            .map(|l| match l.split_once(" = ") {
                Some((k, _)) if k == key => {
                    found = true;
                    format!("{key} = {value}\n")
                }
                _ => format!("{l}\n"),
            })
            .collect();
        if !found {
            text.push_str(&format!("{key} = {value}\n"));
        }
        Self::new(&text)
    }

    fn serialize(&self) -> String {
        serialize_config(&self.inner)
    }

    #[getter]
    fn nx(&self) -> usize {
        self.inner.nx
    }

    #[getter]
    fn ny(&self) -> usize {
        self.inner.ny
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.t_end
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[getter]
    fn initial(&self) -> String {
        self.inner.initial.clone()
    }

    /// Physical coefficients keyed like the configuration file.
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = &self.inner.params;
        let d = PyDict::new(py);
        for (k, v) in [
            ("rho_b", p.rho_b),
            ("mu_e", p.mu_e),
            ("lambda_e", p.lambda_e),
            ("mu_v", p.mu_v),
            ("lambda_v", p.lambda_v),
            ("alpha", p.alpha),
            ("c0", p.c0),
            ("kappa", p.kappa),
            ("rho_p", p.rho_p),
            ("nu", p.nu),
            ("beta", p.beta),
            ("L", p.l),
            ("R", p.r),
        ] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(nx={}, ny={}, dt={}, T={}, delta={}, initial={})",
            self.inner.nx, self.inner.ny, self.inner.dt, self.inner.t_end, self.inner.delta, self.inner.initial
        )
    }
}

type LedgerTuple = (usize, f64, f64, f64, f64, f64, f64, f64, f64, String);

/// Outcome of a simulation run.
#[pyclass(name = "RunResult", skip_from_py_object)]
struct PyRunResult {
    #[pyo3(get)]
    termination: String,
    #[pyo3(get)]
    initial_energy: f64,
    #[pyo3(get)]
    final_energy: f64,
    #[pyo3(get)]
    final_time: f64,
    /// `E^n + sum D <= E_0` and the monotone chain held at every accepted step
    #[pyo3(get)]
    energy_bound_holds: bool,
    #[pyo3(get)]
    ledger: Vec<LedgerTuple>,
    csv: String,
}

#[pymethods]
impl PyRunResult {
    /// Ledger in the CLI's CSV format.
    fn ledger_csv(&self) -> String {
        self.csv.clone()
    }

    fn __repr__(&self) -> String {
        format!("RunResult(steps={}, termination={})", self.ledger.len(), self.termination)
    }
}

/// Simulate from the configured initial data without external forcing.
#[pyfunction]
fn run(py: Python<'_>, config: &PyConfig) -> PyResult<PyRunResult> {
    let cfg = config.inner.clone();
    py.detach(move || -> Result<PyRunResult, FpsiError> {
        let disc = Discretization::new(cfg.params, cfg.nx, cfg.ny, cfg.degrees(), cfg.quad_order)?;
        let s0 = cfg.initial_case()?.build(&disc)?;
        let sim = Simulation::new(disc, cfg.scheme_config(), Forcing::default())?;
        let r = sim.run(s0)?;
        let mut buf = Vec::new();
        csv::write_ledger(&mut buf, &r.ledger)?;
        let check = check_global_energy_inequality(&r.ledger, r.ledger.e0, 0.0);
        Ok(PyRunResult {
            termination: r.termination.as_str().into(),
            initial_energy: r.ledger.e0,
            final_energy: sim.full_energy(&r.final_state),
            final_time: r.final_state.t,
            energy_bound_holds: check.all_pass(),
            ledger: r
                .ledger
                .rows
                .iter()
                .map(|x| (x.n, x.t, x.e_half, x.e_full, x.d, x.res_eq1, x.res_eq2, x.min_det, x.min_gap_r, x.verdict.as_str().into()))
                .collect(),
            csv: String::from_utf8(buf).expect("ascii"),
        })
    })
    .map_err(to_py)
}

/// Residual check of a manufactured reference with default coefficients.
#[pyfunction]
#[pyo3(signature = (kind = "separable", points = 100, t_end = 1.0, seed = 0))]
fn check_reference<'py>(py: Python<'py>, kind: &str, points: usize, t_end: f64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let k = ReferenceKind::parse(kind).map_err(to_py)?;
    let re = build_reference(k, Default::default(), ReferenceAmplitudes::default()).map_err(to_py)?;
    let r = check_reference_residuals(&re, points, t_end, seed);
    let d = PyDict::new(py);
    for (name, v) in [
        ("fluid", r.fluid),
        ("divergence", r.divergence),
        ("fluid_interface", r.fluid_interface),
        ("body", r.biot),
        ("pressure", r.pressure),
        ("plate", r.plate),
        ("coupling", r.coupling),
        ("max", r.max()),
    ] {
        d.set_item(name, v)?;
    }
    Ok(d)
}

/// The property suite as `(name, passed, detail)` triples.
#[pyfunction]
#[pyo3(signature = (seed = 0))]
fn verify(py: Python<'_>, seed: u64) -> Vec<(String, bool, String)> {
    py.detach(|| {
        fpsi::verify::full_suite(seed)
            .into_iter()
            .map(|r| (r.name.to_string(), r.passed, r.detail))
            .collect()
    })
}

/// Convolution error of the smooth test field at the given widths.
#[pyfunction]
#[pyo3(signature = (deltas, l = 1.0, r = 1.0, h_aux_factor = 0.125, n = 64))]
fn mollifier_rates<'py>(py: Python<'py>, deltas: Vec<f64>, l: f64, r: f64, h_aux_factor: f64, n: usize) -> PyResult<Bound<'py, PyDict>> {
    let rep = py
        .detach(|| convolution_rate_report(rate_test_field(l, r), l, r, &deltas, h_aux_factor, n))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("delta", rep.rows.iter().map(|x| x.delta).collect::<Vec<_>>())?;
    d.set_item("h1_error", rep.rows.iter().map(|x| x.h1_error).collect::<Vec<_>>())?;
    d.set_item("grad_max_error", rep.rows.iter().map(|x| x.grad_max_error).collect::<Vec<_>>())?;
    d.set_item("order_h1", rep.order_h1)?;
    d.set_item("order_grad", rep.order_grad)?;
    Ok(d)
}

/// Consistency sweep of the configured reference over `sweep_deltas`.
#[pyfunction]
fn delta_sweep<'py>(py: Python<'py>, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone();
    let rep = py
        .detach(move || {
            let re = build_reference(cfg.reference, cfg.params, cfg.reference_amplitudes)?;
            run_sweep(
                &re,
                &SweepConfig {
                    deltas: cfg.sweep_deltas.clone(),
                    nx: cfg.nx,
                    ny: cfg.ny,
                    dt: cfg.dt,
                    t_end: cfg.t_end,
                    h_aux_factor: cfg.h_aux_factor,
                    quad_order: cfg.quad_order,
                    thresholds: cfg.thresholds,
                    floor_probe: cfg.floor_probe,
                },
            )
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("delta", rep.rows.iter().map(|x| x.delta).collect::<Vec<_>>())?;
    d.set_item("max_E", rep.rows.iter().map(|x| x.max_e).collect::<Vec<_>>())?;
    d.set_item("terms", rep.rows.iter().map(|x| x.terms.to_vec()).collect::<Vec<_>>())?;
    d.set_item("bootstrap_min_det", rep.rows.iter().map(|x| x.bootstrap_min_det).collect::<Vec<_>>())?;
    d.set_item("termination", rep.rows.iter().map(|x| x.termination.as_str()).collect::<Vec<_>>())?;
    d.set_item("floor_estimate", rep.floor_estimate)?;
    d.set_item("fitted_order", rep.fitted_order)?;
    d.set_item("monotone", rep.monotone())?;
    Ok(d)
}

#[pymodule]
fn fpsi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(check_reference, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(mollifier_rates, m)?)?;
    m.add_function(wrap_pyfunction!(delta_sweep, m)?)?;
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("DegeneracyError", m.py().get_type::<DegeneracyError>())?;
    m.add("VERDICTS", [Verdict::Ok, Verdict::PlateTouchesBoundary, Verdict::LagrangianDegenerate].map(|v| v.as_str()))?;
    Ok(())
}
