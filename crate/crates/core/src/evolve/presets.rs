//! Ready-made configurations for the two experiment pipelines.

use super::criteria::{Metric, ScoreRule, SelectionCriterion, StatusConstraint};
use super::engine::{
    initial_ratio_for_unsat, EvolutionConfig, InitialFormula, StageDuration, StagePlan,
};
use super::operators::{ClauseSelection, TransitionOperator};
use crate::cnf::RandomFormulaSpec;

/// Single-stage greedy run: replace one random clause per generation, keep
/// the candidate unless its propagation count drops.
pub fn single_stage(
    num_variables: u32,
    num_clauses: usize,
    clause_width: usize,
    generations: u64,
    seed: u64,
) -> EvolutionConfig {
    let stage = StagePlan {
        operator: TransitionOperator::ReplaceClause,
        metric: Metric::Propagations,
        criterion: SelectionCriterion::new(ScoreRule::NonDecreasing, StatusConstraint::None),
        duration: StageDuration::Generations(generations),
        clause_selection: ClauseSelection::Uniform,
    };
    EvolutionConfig::new(
        InitialFormula::Random(RandomFormulaSpec {
            num_variables,
            num_clauses,
            clause_width,
            seed,
        }),
        vec![stage],
        seed,
    )
}

/// The stage-1 plan of the unsatisfiable pipeline: drop clauses while the
/// formula stays UNSAT, for `factor` generations per starting clause.
pub fn shrink_unsat_stage(factor: u64) -> StagePlan {
    StagePlan {
        operator: TransitionOperator::RemoveClause,
        metric: Metric::Decisions,
        criterion: SelectionCriterion::new(ScoreRule::Ignore, StatusConstraint::MustBeUnsat),
        duration: StageDuration::ClauseFactor(factor),
        clause_selection: ClauseSelection::Uniform,
    }
}

/// The stage-2 plan: replace clauses, keep the candidate if it is still
/// UNSAT and needs at least as many decisions.
pub fn harden_unsat_stage(generations: u64) -> StagePlan {
    StagePlan {
        operator: TransitionOperator::ReplaceClause,
        metric: Metric::Decisions,
        criterion: SelectionCriterion::new(ScoreRule::NonDecreasing, StatusConstraint::MustBeUnsat),
        duration: StageDuration::Generations(generations),
        clause_selection: ClauseSelection::Uniform,
    }
}

/// Two-stage unsatisfiable pipeline on 3-CNF starting at `6 n` clauses.
pub fn two_stage_unsat(
    num_variables: u32,
    stage1_factor: u64,
    stage2_generations: u64,
    seed: u64,
) -> EvolutionConfig {
    let num_clauses = initial_ratio_for_unsat(num_variables, 3).expect("3-CNF has a default ratio");
    EvolutionConfig::new(
        InitialFormula::Random(RandomFormulaSpec {
            num_variables,
            num_clauses,
            clause_width: 3,
            seed,
        }),
        vec![
            shrink_unsat_stage(stage1_factor),
            harden_unsat_stage(stage2_generations),
        ],
        seed,
    )
}
