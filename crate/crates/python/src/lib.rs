//! Python bindings: formulas, the DPLL solver, the brute-force oracle and the
//! two evolution presets.

use hardcnf_core::evolve::{self, presets, EvolutionOutcome, GenerationRecord};
use hardcnf_core::{
    self as core, Clause, Heuristic, Phase, RandomFormulaSpec, SolveStatus, SolverConfig,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// A CNF formula over variables `1..=num_variables`.
#[pyclass(
    name = "CnfFormula",
    module = "hardcnf",
    frozen,
    eq,
    skip_from_py_object
)]
#[derive(Clone, PartialEq)]
pub struct PyCnfFormula {
    inner: core::CnfFormula,
}

#[pymethods]
impl PyCnfFormula {
    /// `clauses` uses DIMACS literals: `3` is x3, `-3` its negation.
    #[new]
    fn new(num_variables: u32, clauses: Vec<Vec<i64>>) -> PyResult<Self> {
        let clauses = clauses
            .iter()
            .map(|c| {
                Clause::from_dimacs(c)
                    .ok_or_else(|| value_error(format!("invalid literal in clause {c:?}")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let inner = core::CnfFormula::new(num_variables, clauses).map_err(value_error)?;
        Ok(PyCnfFormula { inner })
    }

    #[staticmethod]
    fn from_dimacs(text: &str) -> PyResult<Self> {
        let inner = core::parse_dimacs_str(text).map_err(value_error)?;
        Ok(PyCnfFormula { inner })
    }

    fn to_dimacs(&self) -> String {
        core::write_dimacs(&self.inner)
    }

    #[getter]
    fn num_variables(&self) -> u32 {
        self.inner.num_variables()
    }

    #[getter]
    fn num_clauses(&self) -> usize {
        self.inner.num_clauses()
    }

    #[getter]
    fn clauses(&self) -> Vec<Vec<i64>> {
        self.inner.clauses().iter().map(Clause::to_dimacs).collect()
    }

    /// `assignment[i]` is the value of variable `i + 1`.
    fn is_satisfied_by(&self, assignment: Vec<bool>) -> PyResult<bool> {
        if assignment.len() != self.inner.num_variables() as usize {
            return Err(value_error("assignment length differs from num_variables"));
        }
        Ok(self.inner.is_satisfied_by(&assignment))
    }

    fn __len__(&self) -> usize {
        self.inner.num_clauses()
    }

    fn __repr__(&self) -> String {
        format!(
            "CnfFormula(num_variables={}, num_clauses={})",
            self.inner.num_variables(),
            self.inner.num_clauses()
        )
    }
}

/// Counters and status of one solver run.
#[pyclass(
    name = "SolveStats",
    module = "hardcnf",
    frozen,
    get_all,
    skip_from_py_object
)]
#[derive(Clone)]
pub struct PySolveStats {
    /// `"SAT"`, `"UNSAT"` or `"LIMIT_EXCEEDED"`.
    status: String,
    decisions: u64,
    propagations: u64,
    model: Option<Vec<bool>>,
}

impl From<core::SolveStats> for PySolveStats {
    fn from(s: core::SolveStats) -> Self {
        PySolveStats {
            status: s.status.as_str().to_string(),
            decisions: s.decisions,
            propagations: s.propagations,
            model: s.model,
        }
    }
}

#[pymethods]
impl PySolveStats {
    fn __repr__(&self) -> String {
        format!(
            "SolveStats(status={:?}, decisions={}, propagations={})",
            self.status, self.decisions, self.propagations
        )
    }
}

fn solver_config(
    heuristic: &str,
    phase: &str,
    decision_limit: Option<u64>,
    seed: u64,
) -> PyResult<SolverConfig> {
    let heuristic = match heuristic {
        "static" => Heuristic::StaticMinIndex,
        "jw" | "jeroslow_wang" => Heuristic::JeroslowWang,
        "random" => Heuristic::Random { seed },
        other => return Err(value_error(format!("unknown heuristic {other:?}"))),
    };
    let first_phase = match phase {
        "positive" => Phase::Positive,
        "negative" => Phase::Negative,
        other => return Err(value_error(format!("unknown phase {other:?}"))),
    };
    Ok(SolverConfig {
        heuristic,
        first_phase,
        decision_limit,
    })
}

/// Uniform random k-CNF formula.
#[pyfunction]
#[pyo3(signature = (num_variables, num_clauses, clause_width = 3, seed = 0))]
fn generate(
    num_variables: u32,
    num_clauses: usize,
    clause_width: usize,
    seed: u64,
) -> PyResult<PyCnfFormula> {
    let inner = core::generate_random_kcnf(&RandomFormulaSpec {
        num_variables,
        num_clauses,
        clause_width,
        seed,
    })
    .map_err(value_error)?;
    Ok(PyCnfFormula { inner })
}

/// DPLL with counters. `heuristic` is `"static"`, `"jw"` or `"random"`.
#[pyfunction]
#[pyo3(signature = (formula, heuristic = "static", phase = "positive", decision_limit = None, seed = 0))]
fn solve(
    py: Python<'_>,
    formula: &PyCnfFormula,
    heuristic: &str,
    phase: &str,
    decision_limit: Option<u64>,
    seed: u64,
) -> PyResult<PySolveStats> {
    let config = solver_config(heuristic, phase, decision_limit, seed)?;
    let stats = py.detach(|| core::solve(&formula.inner, &config));
    Ok(stats.into())
}

/// Exhaustive check; at most 24 variables.
#[pyfunction]
fn brute_force_sat(formula: &PyCnfFormula) -> PyResult<String> {
    let status: SolveStatus = core::brute_force_sat(&formula.inner).map_err(value_error)?;
    Ok(status.as_str().to_string())
}

/// Outcome of an evolution run, with its sampled trace.
#[pyclass(name = "EvolutionResult", module = "hardcnf", frozen, get_all)]
pub struct PyEvolutionResult {
    initial: PyCnfFormula,
    initial_stats: PySolveStats,
    final_formula: PyCnfFormula,
    final_stats: PySolveStats,
    best: Option<PyCnfFormula>,
    best_stats: Option<PySolveStats>,
    generations: u64,
    trace: Vec<Py<PyDict>>,
}

fn record_dict<'py>(py: Python<'py>, r: &GenerationRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("generation", r.generation)?;
    d.set_item("score", r.score)?;
    d.set_item("decisions", r.decisions)?;
    d.set_item("propagations", r.propagations)?;
    d.set_item("clauses", r.clauses)?;
    d.set_item("accepted", r.accepted)?;
    d.set_item("status", r.status.as_str())?;
    d.set_item("event", r.event.as_str())?;
    Ok(d)
}

fn run(
    py: Python<'_>,
    mut config: evolve::EvolutionConfig,
    decision_limit: Option<u64>,
    record_every: u64,
) -> PyResult<PyEvolutionResult> {
    config.solver.decision_limit = decision_limit;
    config.record_every = record_every;
    let (outcome, records): (EvolutionOutcome, Vec<GenerationRecord>) = py
        .detach(|| {
            let mut records = Vec::new();
            evolve::evolve(&config, &mut records).map(|o| (o, records))
        })
        .map_err(value_error)?;
    let trace = records
        .iter()
        .map(|r| record_dict(py, r).map(Bound::unbind))
        .collect::<PyResult<_>>()?;
    let wrap = |f: core::CnfFormula| PyCnfFormula { inner: f };
    Ok(PyEvolutionResult {
        initial: wrap(outcome.initial),
        initial_stats: outcome.initial_stats.into(),
        final_formula: wrap(outcome.final_formula),
        final_stats: outcome.final_stats.into(),
        best_stats: outcome.best.as_ref().map(|b| b.stats.clone().into()),
        best: outcome.best.map(|b| wrap(b.formula)),
        generations: outcome.generations,
        trace,
    })
}

/// Single-stage run: replace clauses, keep non-decreasing propagations.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (num_variables = 50, num_clauses = 100, clause_width = 3, generations = 1000, seed = 1, decision_limit = Some(evolve::DEFAULT_DECISION_LIMIT), record_every = 1))]
fn evolve_single_stage(
    py: Python<'_>,
    num_variables: u32,
    num_clauses: usize,
    clause_width: usize,
    generations: u64,
    seed: u64,
    decision_limit: Option<u64>,
    record_every: u64,
) -> PyResult<PyEvolutionResult> {
    let config = presets::single_stage(num_variables, num_clauses, clause_width, generations, seed);
    run(py, config, decision_limit, record_every)
}

/// Two-stage UNSAT run starting from `6 n` clauses.
#[pyfunction]
#[pyo3(signature = (num_variables = 50, stage1_factor = 10, generations = 1000, seed = 1, decision_limit = Some(evolve::DEFAULT_DECISION_LIMIT), record_every = 1))]
fn evolve_two_stage_unsat(
    py: Python<'_>,
    num_variables: u32,
    stage1_factor: u64,
    generations: u64,
    seed: u64,
    decision_limit: Option<u64>,
    record_every: u64,
) -> PyResult<PyEvolutionResult> {
    let config = presets::two_stage_unsat(num_variables, stage1_factor, generations, seed);
    run(py, config, decision_limit, record_every)
}

#[pymodule]
fn hardcnf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCnfFormula>()?;
    m.add_class::<PySolveStats>()?;
    m.add_class::<PyEvolutionResult>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_sat, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_single_stage, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_two_stage_unsat, m)?)?;
    m.add("TRACE_HEADER", core::trace::TRACE_HEADER)?;
    Ok(())
}
