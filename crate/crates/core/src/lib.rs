//! Local search over random k-CNF formulas toward instances that are hard for
//! a SAT solver.
//!
//! The fitness of a formula is the effort an instrumented DPLL solver spends
//! on it ([`dpll::SolveStats`]: decisions and unit propagations). The
//! [`evolve`] module mutates a formula one move at a time and keeps the
//! candidate whenever its score does not drop, optionally constraining the
//! formula to stay satisfiable or unsatisfiable. [`external`] measures
//! formulas with any DIMACS-speaking solver executable so hardness can be
//! checked against a second solver.

pub mod cnf;
pub mod dimacs;
pub mod dpll;
pub mod evolve;
pub mod external;
pub mod rng;
pub mod trace;

pub use cnf::{
    generate_random_clause, generate_random_kcnf, Clause, CnfError, CnfFormula, Literal,
    RandomFormulaSpec, Variable,
};
pub use dimacs::{parse_dimacs, parse_dimacs_str, write_dimacs, DimacsError};
pub use dpll::{
    brute_force_sat, solve, unit_propagate, Assignment, Heuristic, Phase, SolveStats, SolveStatus,
    SolverConfig,
};
pub use external::{run_external, transfer_report, ExternalRunResult, ExternalSolverSpec};
pub use trace::{read_trace, CsvTraceSink};
