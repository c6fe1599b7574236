use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ghinv::interp::{check_postcondition, CheckOptions, DEFAULT_BUDGET};
use ghinv::pipeline::{self, InferOptions, ModeKind, Status, TauChoice};
use ghinv::solver::DEFAULT_CAP;
use ghinv::{Error, LiteralPolicy, Rational, Var};

create_exception!(ghinv, GhinvError, PyException);

fn err(e: Error) -> PyErr {
    GhinvError::new_err(e.to_string())
}

fn literal_policy(name: &str) -> PyResult<LiteralPolicy> {
    match name {
        "none" => Ok(LiteralPolicy::None),
        "all" => Ok(LiteralPolicy::AllOccurrences),
        "coalesced" => Ok(LiteralPolicy::Coalesced),
        _ => Err(GhinvError::new_err(format!("unknown literal policy `{name}`"))),
    }
}

/// Exact multivariate polynomial with rational coefficients.
#[pyclass(name = "Polynomial", module = "ghinv", frozen)]
#[derive(Clone)]
struct PyPolynomial {
    inner: ghinv::Polynomial,
}

#[pymethods]
impl PyPolynomial {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyPolynomial {
            inner: ghinv::parse_poly(text).map_err(err)?,
        })
    }

    /// Total degree; None for the zero polynomial.
    #[getter]
    fn degree(&self) -> Option<u32> {
        self.inner.degree()
    }

    #[getter]
    fn vars(&self) -> Vec<String> {
        self.inner.vars().into_iter().map(|v| v.to_string()).collect()
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    /// Evaluates at a point given as {name: int | Fraction | str}. Returns
    /// the value as a `fractions.Fraction`.
    fn evaluate<'py>(&self, py: Python<'py>, point: &Bound<'py, PyDict>) -> PyResult<Bound<'py, PyAny>> {
        let mut state = BTreeMap::new();
        for (k, v) in point.iter() {
            let name: String = k.extract()?;
            let var = Var::new(&name).map_err(err)?;
            let text = v.str()?.to_string();
            let value: Rational = text
                .trim()
                .parse()
                .map_err(|_| GhinvError::new_err(format!("`{text}` is not a rational number")))?;
            state.insert(var, value);
        }
        let value = self.inner.eval(&state).map_err(err)?;
        py.import("fractions")?
            .getattr("Fraction")?
            .call1((value.to_string(),))
    }

    fn __add__(&self, other: &PyPolynomial) -> PyPolynomial {
        PyPolynomial {
            inner: &self.inner + &other.inner,
        }
    }

    fn __sub__(&self, other: &PyPolynomial) -> PyPolynomial {
        PyPolynomial {
            inner: &self.inner - &other.inner,
        }
    }

    fn __mul__(&self, other: &PyPolynomial) -> PyPolynomial {
        PyPolynomial {
            inner: &self.inner * &other.inner,
        }
    }

    fn __neg__(&self) -> PyPolynomial {
        PyPolynomial { inner: -&self.inner }
    }

    fn __pow__(&self, e: u32, _modulo: Option<Py<PyAny>>) -> PyPolynomial {
        PyPolynomial {
            inner: self.inner.pow(e),
        }
    }

    fn __eq__(&self, other: &PyPolynomial) -> bool {
        self.inner == other.inner
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Polynomial('{}')", self.inner)
    }
}

/// A parsed program of the loop language.
#[pyclass(name = "Program", module = "ghinv", frozen)]
struct PyProgram {
    inner: ghinv::Program,
}

#[pymethods]
impl PyProgram {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        Ok(PyProgram {
            inner: ghinv::parse_program(source).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)?;
        Self::new(&text)
    }

    /// Variables in order of first occurrence.
    #[getter]
    fn vars(&self) -> Vec<String> {
        self.inner.vars().iter().map(|v| v.to_string()).collect()
    }

    fn __str__(&self) -> String {
        ghinv::pretty_print(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Program(vars={:?})", self.vars())
    }
}

/// Result of an inference run.
#[pyclass(name = "InferResult", module = "ghinv", frozen, get_all)]
struct PyInferResult {
    /// "Found", "NoSolution", "EmptyTemplate", "CapExceeded" or "Error".
    status: String,
    invariants: Vec<PyPolynomial>,
    template_size: usize,
    matchings_tried: usize,
    tau: Option<String>,
    t_inf_ms: f64,
    t_sol_ms: f64,
    /// The full report as JSON, same schema as the command line tool.
    report_json: String,
}

#[pymethods]
impl PyInferResult {
    fn __repr__(&self) -> String {
        let invs: Vec<String> = self.invariants.iter().map(|p| p.inner.to_string()).collect();
        format!(
            "InferResult(status={:?}, template_size={}, invariants={:?})",
            self.status, self.template_size, invs
        )
    }
}

#[pyclass(name = "CheckResult", module = "ghinv", frozen, get_all)]
struct PyCheckResult {
    passed: bool,
    violations: usize,
    vacuous: usize,
    terminated: usize,
}

#[pymethods]
impl PyCheckResult {
    fn __bool__(&self) -> bool {
        self.passed
    }

    fn __repr__(&self) -> String {
        format!(
            "CheckResult(passed={}, violations={}, vacuous={}, terminated={})",
            self.passed, self.violations, self.vacuous, self.terminated
        )
    }
}

/// Infers the g-degree assignment. Returns (gamma, literals) where gamma
/// maps variable names to degree strings and literals lists the lifted
/// constants as (name, value) pairs.
type GammaTable = (BTreeMap<String, String>, Vec<(String, String)>);

#[pyfunction]
#[pyo3(signature = (program, literals = "coalesced"))]
fn gamma(program: &PyProgram, literals: &str) -> PyResult<GammaTable> {
    let inf = ghinv::infer_gamma(&program.inner, literal_policy(literals)?).map_err(err)?;
    let g = inf.gamma.iter().map(|(v, d)| (v.to_string(), d.to_string())).collect();
    let lits = inf
        .literals
        .entries
        .iter()
        .map(|e| (e.var.to_string(), e.value.to_string()))
        .collect();
    Ok((g, lits))
}

/// Synthesizes invariants at program exit.
#[pyfunction]
#[pyo3(signature = (
    program, degree, mode = "gh", target = None, tau_sweep = false, mults = Vec::new(),
    emit_basis = false, cap = DEFAULT_CAP, literals = "coalesced", check = false, align = false,
    name = "program"
))]
#[allow(clippy::too_many_arguments)]
fn infer(
    py: Python<'_>,
    program: &PyProgram,
    degree: u32,
    mode: &str,
    target: Option<&str>,
    tau_sweep: bool,
    mults: Vec<String>,
    emit_basis: bool,
    cap: usize,
    literals: &str,
    check: bool,
    align: bool,
    name: &str,
) -> PyResult<PyInferResult> {
    let mode = match mode {
        "gh" => ModeKind::Gh,
        "full" => ModeKind::Full,
        _ => return Err(GhinvError::new_err(format!("unknown mode `{mode}`"))),
    };
    let mut opts = InferOptions::new(degree, mode);
    opts.emit_basis = emit_basis;
    opts.cap = cap;
    opts.literal_policy = literal_policy(literals)?;
    for m in &mults {
        opts.extra_mults.push(ghinv::parse_poly(m).map_err(err)?);
    }
    if mode == ModeKind::Gh {
        opts.tau = Some(match (target, tau_sweep) {
            (Some(t), _) => TauChoice::Target(pipeline::parse_target(t).map_err(err)?),
            (None, true) => TauChoice::Sweep,
            (None, false) => return Err(GhinvError::new_err("gh mode needs a target or tau_sweep=True")),
        });
    }
    let prog = &program.inner;
    let outcome = py.allow_threads(|| -> Result<_, Error> {
        let mut outcome = pipeline::infer(name, prog, &opts);
        if check && outcome.report.status == Status::Found {
            let mut copts = CheckOptions::default();
            if align {
                copts.aligned = pipeline::aligned_vars(prog)?;
            }
            pipeline::self_check(prog, &mut outcome, &copts)?;
        }
        Ok(outcome)
    });
    let outcome = outcome.map_err(err)?;
    let r = &outcome.report;
    Ok(PyInferResult {
        status: format!("{:?}", r.status),
        invariants: outcome
            .invariants
            .iter()
            .map(|p| PyPolynomial { inner: p.clone() })
            .collect(),
        template_size: r.template_size,
        matchings_tried: r.matchings_tried,
        tau: r.tau.clone(),
        t_inf_ms: r.t_inf_ms,
        t_sol_ms: r.t_sol_ms,
        report_json: serde_json::to_string(r).map_err(|e| GhinvError::new_err(e.to_string()))?,
    })
}

/// Checks that `invariant` vanishes at exit on random terminating runs.
#[pyfunction]
#[pyo3(signature = (program, invariant, trials = 100, steps = DEFAULT_BUDGET, seed = 42, align = false))]
fn check(
    py: Python<'_>,
    program: &PyProgram,
    invariant: &PyPolynomial,
    trials: usize,
    steps: u64,
    seed: u64,
    align: bool,
) -> PyResult<PyCheckResult> {
    let prog = &program.inner;
    let p = &invariant.inner;
    let report = py
        .allow_threads(|| -> Result<_, Error> {
            let aligned = if align { pipeline::aligned_vars(prog)? } else { Vec::new() };
            let opts = CheckOptions {
                trials,
                budget: steps,
                seed,
                aligned,
            };
            check_postcondition(prog, p, &opts)
        })
        .map_err(err)?;
    Ok(PyCheckResult {
        passed: report.passed,
        violations: report.violations.len(),
        vacuous: report.vacuous_count,
        terminated: report.terminated_count,
    })
}

#[pymodule(name = "ghinv")]
fn ghinv_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GhinvError", m.py().get_type::<GhinvError>())?;
    m.add_class::<PyPolynomial>()?;
    m.add_class::<PyProgram>()?;
    m.add_class::<PyInferResult>()?;
    m.add_class::<PyCheckResult>()?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    Ok(())
}
