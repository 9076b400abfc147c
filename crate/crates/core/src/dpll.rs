//! Instrumented DPLL solver.
//!
//! The solver is deliberately plain: unit propagation, one branching rule,
//! chronological backtracking, no learning. What matters here is that the
//! effort counters are exact and reproducible, because they are the fitness
//! signal of the evolution loop.
//!
//! * `decisions` counts branch nodes. Trying the second phase of a node is
//!   not a new decision.
//! * `propagations` counts variables fixed by the unit rule, including those
//!   fixed in subtrees that are later refuted. Branch assignments are never
//!   counted.
//!
//! Propagation uses per-clause true/false literal counters updated eagerly on
//! every assignment, which for the small, dense formulas evolved here is
//! faster than watched literals and trivially undoable.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{CnfFormula, Literal, Variable};
use crate::rng::{seeded_stream, SeededRng, SOLVER_STREAM};

/// Largest formula the brute-force oracle will enumerate.
pub const ORACLE_MAX_VARIABLES: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Sat,
    Unsat,
    LimitExceeded,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Sat => "SAT",
            SolveStatus::Unsat => "UNSAT",
            SolveStatus::LimitExceeded => "LIMIT_EXCEEDED",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "SAT" => Some(SolveStatus::Sat),
            "UNSAT" => Some(SolveStatus::Unsat),
            "LIMIT_EXCEEDED" => Some(SolveStatus::LimitExceeded),
            _ => None,
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Branching rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    /// Lowest-index unassigned variable.
    StaticMinIndex,
    /// Jeroslow-Wang: maximize the sum of `2^-len` over the unsatisfied
    /// clauses containing the literal, with `len` the number of unassigned
    /// literals. Ties go to the lowest variable index.
    JeroslowWang,
    /// Uniform over unassigned variables, from a fixed seed.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    Positive,
    Negative,
}

impl Phase {
    fn literal(self, var: Variable) -> Literal {
        Literal::new(var, self == Phase::Positive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub heuristic: Heuristic,
    #[serde(default)]
    pub first_phase: Phase,
    #[serde(default)]
    pub decision_limit: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            heuristic: Heuristic::StaticMinIndex,
            first_phase: Phase::Positive,
            decision_limit: None,
        }
    }
}

impl SolverConfig {
    pub fn with_heuristic(heuristic: Heuristic) -> Self {
        SolverConfig {
            heuristic,
            ..Self::default()
        }
    }
}

/// Outcome of one solver run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub status: SolveStatus,
    pub decisions: u64,
    pub propagations: u64,
    /// Satisfying assignment, `model[v - 1]` for variable `v`. Present iff SAT.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Vec<bool>>,
}

/// A partial assignment indexed by [`Variable::offset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new(num_variables: u32) -> Self {
        Assignment {
            values: vec![None; num_variables as usize],
        }
    }

    pub fn get(&self, var: Variable) -> Option<bool> {
        self.values[var.offset()]
    }

    pub fn set(&mut self, var: Variable, value: bool) {
        self.values[var.offset()] = Some(value);
    }

    pub fn num_assigned(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn values(&self) -> &[Option<bool>] {
        &self.values
    }
}

/// Result of running unit propagation to fixpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Propagation {
    pub assignment: Assignment,
    pub conflict: bool,
    pub propagations: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error(
        "brute force refused: {0} variables exceed the oracle limit of {ORACLE_MAX_VARIABLES}"
    )]
    TooManyVariables(u32),
}

const UNASSIGNED: u8 = 0;
const TRUE: u8 = 1;
const FALSE: u8 = 2;

struct Frame {
    trail_len: usize,
    literal: Literal,
    flipped: bool,
}

/// Mutable search state over a normalized copy of the formula.
struct Search {
    num_variables: usize,
    /// Literal codes of all clauses, concatenated.
    literals: Vec<Literal>,
    starts: Vec<usize>,
    /// Clause ids per literal code, in compressed rows: the clauses of
    /// literal `l` are `occurrences[occ_starts[l]..occ_starts[l + 1]]`.
    occ_starts: Vec<usize>,
    occurrences: Vec<u32>,
    true_count: Vec<u32>,
    false_count: Vec<u32>,
    satisfied: usize,
    /// Truth value per literal code.
    values: Vec<u8>,
    trail: Vec<Literal>,
    /// FIFO of clauses that became unit; `pending_head` is the next to read.
    pending: Vec<u32>,
    pending_head: usize,
    conflict: bool,
    has_empty_clause: bool,
    propagations: u64,
}

impl Search {
    fn new(formula: &CnfFormula) -> Self {
        let n = formula.num_variables() as usize;
        let mut literals = Vec::with_capacity(formula.num_clauses() * 3);
        let mut starts = vec![0];
        let mut per_literal: Vec<Vec<u32>> = vec![Vec::new(); 2 * n];
        let mut has_empty_clause = false;
        let mut scratch: Vec<Literal> = Vec::new();
        'clauses: for clause in formula.clauses() {
            scratch.clear();
            for &lit in clause.literals() {
                if scratch.contains(&lit.negated()) {
                    // tautology, always satisfied
                    continue 'clauses;
                }
                if !scratch.contains(&lit) {
                    scratch.push(lit);
                }
            }
            if scratch.is_empty() {
                has_empty_clause = true;
            }
            let id = starts.len() as u32 - 1;
            for &lit in &scratch {
                per_literal[lit.code()].push(id);
            }
            literals.extend_from_slice(&scratch);
            starts.push(literals.len());
        }
        let num_clauses = starts.len() - 1;
        let mut occ_starts = Vec::with_capacity(2 * n + 1);
        occ_starts.push(0);
        let mut occurrences = Vec::with_capacity(literals.len());
        for ids in per_literal {
            occurrences.extend_from_slice(&ids);
            occ_starts.push(occurrences.len());
        }
        let mut search = Search {
            num_variables: n,
            literals,
            starts,
            occ_starts,
            occurrences,
            true_count: vec![0; num_clauses],
            false_count: vec![0; num_clauses],
            satisfied: 0,
            values: vec![UNASSIGNED; 2 * n],
            trail: Vec::with_capacity(n),
            pending: Vec::new(),
            pending_head: 0,
            conflict: false,
            has_empty_clause,
            propagations: 0,
        };
        for id in 0..num_clauses {
            if search.clause_len(id) == 1 {
                search.pending.push(id as u32);
            }
        }
        search
    }

    fn num_clauses(&self) -> usize {
        self.starts.len() - 1
    }

    #[inline]
    fn clause_len(&self, id: usize) -> usize {
        self.starts[id + 1] - self.starts[id]
    }

    #[inline]
    fn clause(&self, id: usize) -> &[Literal] {
        &self.literals[self.starts[id]..self.starts[id + 1]]
    }

    #[inline]
    fn value(&self, lit: Literal) -> u8 {
        self.values[lit.code()]
    }

    #[inline]
    fn occurrence_range(&self, lit: Literal) -> std::ops::Range<usize> {
        self.occ_starts[lit.code()]..self.occ_starts[lit.code() + 1]
    }

    /// Values of the positive literals, i.e. of variables 1..=n in order.
    fn variable_values(&self) -> impl Iterator<Item = u8> + '_ {
        self.values.iter().step_by(2).copied()
    }

    fn assign(&mut self, lit: Literal) {
        debug_assert_eq!(self.value(lit), UNASSIGNED);
        self.values[lit.code()] = TRUE;
        self.values[lit.negated().code()] = FALSE;
        self.trail.push(lit);
        for k in self.occurrence_range(lit) {
            let c = self.occurrences[k] as usize;
            self.true_count[c] += 1;
            if self.true_count[c] == 1 {
                self.satisfied += 1;
            }
        }
        for k in self.occurrence_range(lit.negated()) {
            let c = self.occurrences[k];
            let id = c as usize;
            self.false_count[id] += 1;
            if self.true_count[id] == 0 {
                let len = self.starts[id + 1] - self.starts[id];
                let falsified = self.false_count[id] as usize;
                if falsified == len {
                    self.conflict = true;
                } else if falsified + 1 == len {
                    self.pending.push(c);
                }
            }
        }
    }

    /// Applies the unit rule to fixpoint. Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while !self.conflict && self.pending_head < self.pending.len() {
            let id = self.pending[self.pending_head] as usize;
            self.pending_head += 1;
            if self.true_count[id] > 0 {
                continue;
            }
            match self
                .clause(id)
                .iter()
                .copied()
                .find(|&l| self.value(l) == UNASSIGNED)
            {
                Some(lit) => {
                    self.propagations += 1;
                    self.assign(lit);
                }
                None => self.conflict = true,
            }
        }
        self.pending.clear();
        self.pending_head = 0;
        !self.conflict
    }

    fn undo_to(&mut self, trail_len: usize) {
        while self.trail.len() > trail_len {
            let lit = self.trail.pop().expect("trail longer than target");
            for k in self.occurrence_range(lit) {
                let c = self.occurrences[k] as usize;
                self.true_count[c] -= 1;
                if self.true_count[c] == 0 {
                    self.satisfied -= 1;
                }
            }
            for k in self.occurrence_range(lit.negated()) {
                self.false_count[self.occurrences[k] as usize] -= 1;
            }
            self.values[lit.code()] = UNASSIGNED;
            self.values[lit.negated().code()] = UNASSIGNED;
        }
        self.pending.clear();
        self.pending_head = 0;
        self.conflict = false;
    }

    fn all_satisfied(&self) -> bool {
        self.satisfied == self.num_clauses()
    }

    fn pick_static(&self, phase: Phase) -> Option<Literal> {
        self.variable_values()
            .position(|v| v == UNASSIGNED)
            .map(|i| phase.literal(Variable::new(i as u32 + 1)))
    }

    fn pick_jeroslow_wang(&self, phase: Phase, scores: &mut Vec<f64>) -> Option<Literal> {
        scores.clear();
        scores.resize(2 * self.num_variables, 0.0);
        for id in 0..self.num_clauses() {
            if self.true_count[id] > 0 {
                continue;
            }
            let free = self.clause_len(id) - self.false_count[id] as usize;
            let weight = (-(free as f64)).exp2();
            for &lit in self.clause(id) {
                if self.value(lit) == UNASSIGNED {
                    scores[lit.code()] += weight;
                }
            }
        }
        let mut best: Option<(Literal, f64)> = None;
        for (i, v) in self.variable_values().enumerate() {
            if v != UNASSIGNED {
                continue;
            }
            let preferred = phase.literal(Variable::new(i as u32 + 1));
            let other = preferred.negated();
            let (lit, score) = if scores[preferred.code()] >= scores[other.code()] {
                (preferred, scores[preferred.code()])
            } else {
                (other, scores[other.code()])
            };
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((lit, score));
            }
        }
        best.map(|(lit, _)| lit)
    }

    fn pick_random(&self, phase: Phase, rng: &mut SeededRng) -> Option<Literal> {
        let free = self.variable_values().filter(|&v| v == UNASSIGNED).count();
        if free == 0 {
            return None;
        }
        let target = rng.random_range(0..free);
        self.variable_values()
            .enumerate()
            .filter(|&(_, v)| v == UNASSIGNED)
            .nth(target)
            .map(|(i, _)| phase.literal(Variable::new(i as u32 + 1)))
    }

    fn model(&self) -> Vec<bool> {
        self.variable_values().map(|v| v == TRUE).collect()
    }
}

/// Runs unit propagation from `partial` to fixpoint.
///
/// Variables already set in `partial` are not counted; the returned count is
/// the number of variables fixed by the unit rule in this call.
pub fn unit_propagate(formula: &CnfFormula, partial: &Assignment) -> Propagation {
    let mut search = Search::new(formula);
    let mut conflict = search.has_empty_clause;
    if !conflict {
        for (i, value) in partial.values().iter().enumerate() {
            if let Some(value) = *value {
                search.assign(Literal::new(Variable::new(i as u32 + 1), value));
            }
        }
        conflict = !search.propagate();
    }
    let mut assignment = Assignment::new(formula.num_variables());
    for (i, v) in search.variable_values().enumerate() {
        if v != UNASSIGNED {
            assignment.set(Variable::new(i as u32 + 1), v == TRUE);
        }
    }
    Propagation {
        assignment,
        conflict,
        propagations: search.propagations,
    }
}

/// Decides `formula` with DPLL, counting decisions and propagations.
pub fn solve(formula: &CnfFormula, config: &SolverConfig) -> SolveStats {
    let mut search = Search::new(formula);
    if search.has_empty_clause {
        return SolveStats {
            status: SolveStatus::Unsat,
            decisions: 0,
            propagations: 0,
            model: None,
        };
    }
    let mut rng = match config.heuristic {
        Heuristic::Random { seed } => Some(seeded_stream(seed, SOLVER_STREAM)),
        _ => None,
    };
    let mut scores = Vec::new();
    let mut frames: Vec<Frame> = Vec::new();
    let mut decisions = 0u64;

    let finish = |status, decisions, search: &Search| SolveStats {
        status,
        decisions,
        propagations: search.propagations,
        model: (status == SolveStatus::Sat).then(|| search.model()),
    };

    loop {
        if !search.propagate() {
            loop {
                let Some(frame) = frames.pop() else {
                    return finish(SolveStatus::Unsat, decisions, &search);
                };
                search.undo_to(frame.trail_len);
                if !frame.flipped {
                    let literal = frame.literal.negated();
                    frames.push(Frame {
                        trail_len: frame.trail_len,
                        literal,
                        flipped: true,
                    });
                    search.assign(literal);
                    break;
                }
            }
            continue;
        }
        if search.all_satisfied() {
            return finish(SolveStatus::Sat, decisions, &search);
        }
        let phase = config.first_phase;
        let choice = match config.heuristic {
            Heuristic::StaticMinIndex => search.pick_static(phase),
            Heuristic::JeroslowWang => search.pick_jeroslow_wang(phase, &mut scores),
            Heuristic::Random { .. } => {
                search.pick_random(phase, rng.as_mut().expect("rng built for RANDOM"))
            }
        };
        let Some(literal) = choice else {
            // every variable assigned without conflict
            return finish(SolveStatus::Sat, decisions, &search);
        };
        if config
            .decision_limit
            .is_some_and(|limit| decisions >= limit)
        {
            return finish(SolveStatus::LimitExceeded, decisions, &search);
        }
        decisions += 1;
        frames.push(Frame {
            trail_len: search.trail.len(),
            literal,
            flipped: false,
        });
        search.assign(literal);
    }
}

/// Exhaustive satisfiability check over all `2^n` assignments.
pub fn brute_force_sat(formula: &CnfFormula) -> Result<SolveStatus, OracleError> {
    let n = formula.num_variables();
    if n > ORACLE_MAX_VARIABLES {
        return Err(OracleError::TooManyVariables(n));
    }
    let masks: Vec<(u32, u32)> = formula
        .clauses()
        .iter()
        .map(|c| {
            c.literals().iter().fold((0u32, 0u32), |(pos, neg), l| {
                let bit = 1u32 << l.variable().offset();
                if l.is_positive() {
                    (pos | bit, neg)
                } else {
                    (pos, neg | bit)
                }
            })
        })
        .collect();
    let sat =
        (0u32..(1u32 << n)).any(|a| masks.iter().all(|&(pos, neg)| (a & pos) | (!a & neg) != 0));
    Ok(if sat {
        SolveStatus::Sat
    } else {
        SolveStatus::Unsat
    })
}
