//! Local search over formulas.
//!
//! A run is a list of stages. Each stage repeatedly applies its transition
//! operator to the current formula, measures the candidate with the DPLL
//! solver and keeps it when the selection criterion holds; otherwise the
//! parent is restored. Optional breaks (several clauses replaced at once)
//! kick in after a stretch of generations without improvement.

pub mod criteria;
pub mod engine;
pub mod operators;
pub mod presets;
pub mod weights;

pub use criteria::{accept, Metric, ScoreRule, SelectionCriterion, StatusConstraint};
pub use engine::{
    clauses_for_ratio, evolve, evolve_stage, evolve_until, initial_ratio_for_unsat, Archived,
    Event, EvolutionConfig, EvolutionOutcome, EvolutionState, EvolveError, FnSink,
    GenerationRecord, InitialFormula, NullSink, StageDuration, StagePlan, StageSummary, TraceSink,
    DEFAULT_BREAK_SIZE, DEFAULT_BREAK_WINDOW, DEFAULT_DECISION_LIMIT,
};
pub use operators::{
    apply_operator, select_clause_index, ClauseSelection, Mutation, OperatorError,
    TransitionOperator,
};
pub use weights::{update_weights, VariableWeights, WeightParams};
