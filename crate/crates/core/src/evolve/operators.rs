//! Transition operators: the moves that turn the current formula into a
//! candidate.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::weights::VariableWeights;
use crate::cnf::{generate_random_clause, Clause, CnfError, CnfFormula, Literal, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionOperator {
    /// Swap one clause for a fresh random clause of the same width.
    ReplaceClause,
    /// Change one literal of one clause.
    FlipLiteral,
    /// Append a fresh random clause.
    AddClause,
    /// Delete one clause.
    RemoveClause,
    /// Replace this many distinct clauses at once (at least 2).
    MultiReplace(usize),
}

impl TransitionOperator {
    pub fn validate(self) -> Result<(), OperatorError> {
        match self {
            TransitionOperator::MultiReplace(c) if c < 2 => {
                Err(OperatorError::MultiReplaceCount(c))
            }
            _ => Ok(()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TransitionOperator::ReplaceClause => "replace_clause",
            TransitionOperator::FlipLiteral => "flip_literal",
            TransitionOperator::AddClause => "add_clause",
            TransitionOperator::RemoveClause => "remove_clause",
            TransitionOperator::MultiReplace(_) => "multi_replace",
        }
    }
}

/// How the clause to modify is picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseSelection {
    #[default]
    Uniform,
    /// Probability proportional to the summed weights of the clause's
    /// variables.
    WeightBiased,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperatorError {
    #[error("{0} needs at least one clause")]
    NoClauses(&'static str),
    #[error("refusing to remove the last clause")]
    RemoveLastClause,
    #[error("weight-biased selection needs variable weights")]
    MissingWeights,
    #[error("multi_replace needs a count of at least 2, got {0}")]
    MultiReplaceCount(usize),
    #[error(transparent)]
    Clause(#[from] CnfError),
}

/// A candidate formula together with what changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutation {
    pub formula: CnfFormula,
    /// Clause positions touched in the parent (for `AddClause`, the new
    /// clause's position in the candidate).
    pub positions: Vec<usize>,
    /// The clause whose variables are credited or blamed by weight guidance:
    /// the parent's clause at the first touched position, or the appended
    /// clause for `AddClause`.
    pub changed: Clause,
}

/// Picks a clause position according to `mode`.
pub fn select_clause_index<R: Rng + ?Sized>(
    formula: &CnfFormula,
    mode: ClauseSelection,
    weights: Option<&VariableWeights>,
    rng: &mut R,
) -> Result<usize, OperatorError> {
    let m = formula.num_clauses();
    if m == 0 {
        return Err(OperatorError::NoClauses("clause selection"));
    }
    match mode {
        ClauseSelection::Uniform => Ok(rng.random_range(0..m)),
        ClauseSelection::WeightBiased => {
            let weights = weights.ok_or(OperatorError::MissingWeights)?;
            let clause_weights: Vec<f64> = formula
                .clauses()
                .iter()
                .map(|c| weights.clause_weight(c))
                .collect();
            Ok(pick_weighted(&clause_weights, rng).unwrap_or_else(|| rng.random_range(0..m)))
        }
    }
}

fn pick_weighted<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    WeightedIndex::new(weights)
        .ok()
        .map(|dist| dist.sample(rng))
}

/// `count` distinct positions, weighted without replacement when `weights`
/// is given.
fn select_distinct<R: Rng + ?Sized>(
    formula: &CnfFormula,
    count: usize,
    mode: ClauseSelection,
    weights: Option<&VariableWeights>,
    rng: &mut R,
) -> Result<Vec<usize>, OperatorError> {
    let m = formula.num_clauses();
    match mode {
        ClauseSelection::Uniform => Ok(index::sample(rng, m, count).into_vec()),
        ClauseSelection::WeightBiased => {
            let weights = weights.ok_or(OperatorError::MissingWeights)?;
            let mut remaining: Vec<f64> = formula
                .clauses()
                .iter()
                .map(|c| weights.clause_weight(c))
                .collect();
            let mut picked = Vec::with_capacity(count);
            for _ in 0..count {
                let i = match pick_weighted(&remaining, rng) {
                    Some(i) => i,
                    None => {
                        // only zero-weight (empty) clauses left
                        let free: Vec<usize> = (0..m).filter(|i| !picked.contains(i)).collect();
                        free[rng.random_range(0..free.len())]
                    }
                };
                remaining[i] = 0.0;
                picked.push(i);
            }
            Ok(picked)
        }
    }
}

/// Applies `op` to a copy of `formula`. Fresh clauses have `clause_width`
/// literals.
///
/// `MultiReplace(c)` with `c` larger than the clause count is clamped.
pub fn apply_operator<R: Rng + ?Sized>(
    formula: &CnfFormula,
    op: TransitionOperator,
    clause_width: usize,
    selection: ClauseSelection,
    weights: Option<&VariableWeights>,
    rng: &mut R,
) -> Result<Mutation, OperatorError> {
    op.validate()?;
    let n = formula.num_variables();
    let mut next = formula.clone();
    match op {
        TransitionOperator::ReplaceClause => {
            let i = select_clause_index(formula, selection, weights, rng)
                .map_err(|e| no_clauses(e, "replace_clause"))?;
            let fresh = generate_random_clause(n, clause_width, rng)?;
            let old = std::mem::replace(&mut next.clauses_mut()[i], fresh);
            Ok(Mutation {
                formula: next,
                positions: vec![i],
                changed: old,
            })
        }
        TransitionOperator::MultiReplace(count) => {
            if formula.num_clauses() == 0 {
                return Err(OperatorError::NoClauses("multi_replace"));
            }
            let count = count.min(formula.num_clauses());
            let positions = select_distinct(formula, count, selection, weights, rng)?;
            for &i in &positions {
                next.clauses_mut()[i] = generate_random_clause(n, clause_width, rng)?;
            }
            Ok(Mutation {
                changed: formula.clause(positions[0]).clone(),
                formula: next,
                positions,
            })
        }
        TransitionOperator::FlipLiteral => {
            let i = select_clause_index(formula, selection, weights, rng)
                .map_err(|e| no_clauses(e, "flip_literal"))?;
            let old = formula.clause(i).clone();
            if old.is_empty() {
                return Err(OperatorError::NoClauses("flip_literal on an empty clause"));
            }
            flip_literal(&mut next.clauses_mut()[i], n, rng);
            Ok(Mutation {
                formula: next,
                positions: vec![i],
                changed: old,
            })
        }
        TransitionOperator::AddClause => {
            let fresh = generate_random_clause(n, clause_width, rng)?;
            next.clauses_mut().push(fresh.clone());
            Ok(Mutation {
                positions: vec![formula.num_clauses()],
                formula: next,
                changed: fresh,
            })
        }
        TransitionOperator::RemoveClause => {
            match formula.num_clauses() {
                0 => return Err(OperatorError::NoClauses("remove_clause")),
                1 => return Err(OperatorError::RemoveLastClause),
                _ => {}
            }
            let i = select_clause_index(formula, selection, weights, rng)?;
            let old = next.clauses_mut().remove(i);
            Ok(Mutation {
                formula: next,
                positions: vec![i],
                changed: old,
            })
        }
    }
}

fn no_clauses(err: OperatorError, op: &'static str) -> OperatorError {
    match err {
        OperatorError::NoClauses(_) => OperatorError::NoClauses(op),
        other => other,
    }
}

/// With probability 1/2 negates a uniformly chosen literal in place;
/// otherwise swaps it for a literal over a variable the clause does not use
/// yet. Falls back to negation when every variable is already used.
fn flip_literal<R: Rng + ?Sized>(clause: &mut Clause, num_variables: u32, rng: &mut R) {
    let pos = rng.random_range(0..clause.len());
    let negate = rng.random_bool(0.5);
    let unused: Vec<u32> = if negate {
        Vec::new()
    } else {
        (1..=num_variables)
            .filter(|&v| !clause.contains_variable(Variable::new(v)))
            .collect()
    };
    let literals = clause.literals_mut();
    if unused.is_empty() {
        literals[pos] = literals[pos].negated();
    } else {
        let var = Variable::new(unused[rng.random_range(0..unused.len())]);
        literals[pos] = Literal::new(var, rng.random_bool(0.5));
    }
}
