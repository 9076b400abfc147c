//! CNF data model and uniform random k-CNF generation.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("invalid formula spec: clause width {width} must be in [1, {num_variables}]")]
    InvalidWidth { width: usize, num_variables: u32 },
    #[error("invalid formula spec: the formula needs at least one variable")]
    NoVariables,
    #[error("variable x{variable} exceeds the formula's {num_variables} variables")]
    VariableOutOfRange { variable: u32, num_variables: u32 },
}

/// A propositional variable, numbered from 1 as in DIMACS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(u32);

impl Variable {
    /// Panics on index 0; variables are 1-based.
    pub fn new(index: u32) -> Self {
        assert!(index >= 1, "variables are numbered from 1");
        Variable(index)
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Zero-based position, handy for indexing per-variable arrays.
    #[inline]
    pub fn offset(self) -> usize {
        (self.0 - 1) as usize
    }

    pub fn positive(self) -> Literal {
        Literal::new(self, true)
    }

    pub fn negative(self) -> Literal {
        Literal::new(self, false)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// A variable with a polarity.
///
/// Encoded as `2 * (var - 1) + negated`, so a literal and its negation are
/// adjacent codes and `code()` can index literal-keyed tables directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal(u32);

impl Literal {
    #[inline]
    pub fn new(variable: Variable, positive: bool) -> Self {
        Literal(((variable.0 - 1) << 1) | u32::from(!positive))
    }

    #[inline]
    pub fn variable(self) -> Variable {
        Variable((self.0 >> 1) + 1)
    }

    #[inline]
    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    #[inline]
    pub fn negated(self) -> Self {
        Literal(self.0 ^ 1)
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// Signed DIMACS form: `v` or `-v`. Returns `None` for 0.
    pub fn from_dimacs(value: i64) -> Option<Self> {
        if value == 0 || value.unsigned_abs() > u64::from(u32::MAX) {
            return None;
        }
        let var = Variable(value.unsigned_abs() as u32);
        Some(Literal::new(var, value > 0))
    }

    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.variable().0);
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_positive() {
            write!(f, "{}", self.variable())
        } else {
            write!(f, "¬{}", self.variable())
        }
    }
}

/// A disjunction of literals, kept in the order they were created.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Clause {
    literals: Vec<Literal>,
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    /// Builds a clause from signed DIMACS integers. Zeros are rejected.
    pub fn from_dimacs(values: &[i64]) -> Option<Self> {
        values
            .iter()
            .map(|&v| Literal::from_dimacs(v))
            .collect::<Option<Vec<_>>>()
            .map(Clause::new)
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn variables(&self) -> impl Iterator<Item = Variable> + '_ {
        self.literals.iter().map(|l| l.variable())
    }

    pub fn contains_variable(&self, var: Variable) -> bool {
        self.literals.iter().any(|l| l.variable() == var)
    }

    /// True when no variable occurs twice.
    pub fn has_distinct_variables(&self) -> bool {
        self.literals.iter().enumerate().all(|(i, a)| {
            self.literals[i + 1..]
                .iter()
                .all(|b| a.variable() != b.variable())
        })
    }

    pub(crate) fn literals_mut(&mut self) -> &mut Vec<Literal> {
        &mut self.literals
    }

    /// Truth value under a total assignment indexed by `Variable::offset`.
    pub fn is_satisfied_by(&self, values: &[bool]) -> bool {
        self.literals
            .iter()
            .any(|l| values[l.variable().offset()] == l.is_positive())
    }

    pub fn to_dimacs(&self) -> Vec<i64> {
        self.literals.iter().map(|l| l.to_dimacs()).collect()
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, lit) in self.literals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∨ ")?;
            }
            write!(f, "{lit}")?;
        }
        write!(f, ")")
    }
}

/// A conjunction of clauses over variables `1..=num_variables`.
///
/// Clause order is significant: mutation operators address clauses by
/// position, and the DIMACS writer emits them in stored order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    num_variables: u32,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_variables: u32, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        for clause in &clauses {
            check_clause(num_variables, clause)?;
        }
        Ok(CnfFormula {
            num_variables,
            clauses,
        })
    }

    pub fn empty(num_variables: u32) -> Self {
        CnfFormula {
            num_variables,
            clauses: Vec::new(),
        }
    }

    pub fn num_variables(&self) -> u32 {
        self.num_variables
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, index: usize) -> &Clause {
        &self.clauses[index]
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses.iter().any(Clause::is_empty)
    }

    /// Width of the widest clause, 0 for an empty conjunction.
    pub fn max_clause_width(&self) -> usize {
        self.clauses.iter().map(Clause::len).max().unwrap_or(0)
    }

    pub fn push_clause(&mut self, clause: Clause) -> Result<(), CnfError> {
        check_clause(self.num_variables, &clause)?;
        self.clauses.push(clause);
        Ok(())
    }

    pub(crate) fn clauses_mut(&mut self) -> &mut Vec<Clause> {
        &mut self.clauses
    }

    /// Evaluates the formula under a total assignment (`values[v - 1]` is the
    /// value of variable `v`).
    pub fn is_satisfied_by(&self, values: &[bool]) -> bool {
        assert!(values.len() >= self.num_variables as usize);
        self.clauses.iter().all(|c| c.is_satisfied_by(values))
    }
}

fn check_clause(num_variables: u32, clause: &Clause) -> Result<(), CnfError> {
    match clause.variables().find(|v| v.index() > num_variables) {
        Some(v) => Err(CnfError::VariableOutOfRange {
            variable: v.index(),
            num_variables,
        }),
        None => Ok(()),
    }
}

/// Parameters of a uniform random k-CNF formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFormulaSpec {
    pub num_variables: u32,
    pub num_clauses: usize,
    pub clause_width: usize,
    pub seed: u64,
}

impl RandomFormulaSpec {
    pub fn validate(&self) -> Result<(), CnfError> {
        validate_width(self.num_variables, self.clause_width)
    }
}

fn validate_width(num_variables: u32, width: usize) -> Result<(), CnfError> {
    if num_variables == 0 {
        return Err(CnfError::NoVariables);
    }
    if width == 0 || width > num_variables as usize {
        return Err(CnfError::InvalidWidth {
            width,
            num_variables,
        });
    }
    Ok(())
}

/// Draws `width` distinct variables uniformly from `1..=num_variables`, each
/// negated with probability 1/2.
pub fn generate_random_clause<R: Rng + ?Sized>(
    num_variables: u32,
    width: usize,
    rng: &mut R,
) -> Result<Clause, CnfError> {
    validate_width(num_variables, width)?;
    let picked = index::sample(rng, num_variables as usize, width);
    let literals = picked
        .into_iter()
        .map(|offset| Literal::new(Variable(offset as u32 + 1), rng.random_bool(0.5)))
        .collect();
    Ok(Clause::new(literals))
}

/// Generates `spec.num_clauses` independent random clauses from `spec.seed`.
///
/// Clauses are drawn independently, so the same clause may appear twice.
pub fn generate_random_kcnf(spec: &RandomFormulaSpec) -> Result<CnfFormula, CnfError> {
    let mut rng = crate::rng::seeded_stream(spec.seed, crate::rng::FORMULA_STREAM);
    generate_random_kcnf_with(
        spec.num_variables,
        spec.num_clauses,
        spec.clause_width,
        &mut rng,
    )
}

pub fn generate_random_kcnf_with<R: Rng + ?Sized>(
    num_variables: u32,
    num_clauses: usize,
    width: usize,
    rng: &mut R,
) -> Result<CnfFormula, CnfError> {
    validate_width(num_variables, width)?;
    let clauses = (0..num_clauses)
        .map(|_| generate_random_clause(num_variables, width, rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CnfFormula {
        num_variables,
        clauses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn spec(n: u32, m: usize, k: usize, seed: u64) -> RandomFormulaSpec {
        RandomFormulaSpec {
            num_variables: n,
            num_clauses: m,
            clause_width: k,
            seed,
        }
    }

    #[test]
    fn literal_encoding() {
        let x3 = Variable::new(3);
        assert_eq!(x3.positive().variable(), x3);
        assert_eq!(x3.negative().variable(), x3);
        assert!(x3.positive().is_positive());
        assert!(!x3.negative().is_positive());
        assert_eq!(x3.positive().negated(), x3.negative());
        assert_eq!(x3.negative().to_dimacs(), -3);
        assert_eq!(Literal::from_dimacs(-3), Some(x3.negative()));
        assert_eq!(Literal::from_dimacs(0), None);
    }

    #[test]
    fn single_variable_clause_takes_both_polarities() {
        let mut rng = seeded_rng(1);
        let mut seen = [false; 2];
        for _ in 0..64 {
            let c = generate_random_clause(1, 1, &mut rng).unwrap();
            assert_eq!(c.len(), 1);
            assert_eq!(c.literals()[0].variable(), Variable::new(1));
            seen[usize::from(c.literals()[0].is_positive())] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn clause_has_distinct_variables_in_range() {
        let mut rng = seeded_rng(9);
        for _ in 0..1000 {
            let c = generate_random_clause(50, 3, &mut rng).unwrap();
            assert_eq!(c.len(), 3);
            assert!(c.has_distinct_variables());
            assert!(c.variables().all(|v| (1..=50).contains(&v.index())));
        }
    }

    #[test]
    fn width_above_variable_count_is_refused() {
        let mut rng = seeded_rng(0);
        assert_eq!(
            generate_random_clause(2, 3, &mut rng),
            Err(CnfError::InvalidWidth {
                width: 3,
                num_variables: 2
            })
        );
        assert!(generate_random_clause(2, 0, &mut rng).is_err());
        assert_eq!(
            generate_random_clause(0, 1, &mut rng),
            Err(CnfError::NoVariables)
        );
        assert!(generate_random_kcnf(&spec(2, 5, 3, 0)).is_err());
    }

    // Each variable lands in a k-subset of n with probability k/n.
    #[test]
    fn variable_inclusion_frequency_is_uniform() {
        let mut rng = seeded_rng(2024);
        let draws = 100_000;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            for v in generate_random_clause(5, 3, &mut rng).unwrap().variables() {
                counts[v.offset()] += 1;
            }
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.6).abs() <= 0.01, "frequency {freq}");
        }
    }

    #[test]
    fn polarity_is_balanced() {
        let f = generate_random_kcnf(&spec(50, 40_000, 3, 5)).unwrap();
        let total = f.num_clauses() * 3;
        let positive = f
            .clauses()
            .iter()
            .flat_map(|c| c.literals())
            .filter(|l| l.is_positive())
            .count();
        let frac = positive as f64 / total as f64;
        assert!((0.49..=0.51).contains(&frac), "positive fraction {frac}");
    }

    #[test]
    fn fig1_sized_formula() {
        let f = generate_random_kcnf(&spec(50, 100, 3, 11)).unwrap();
        assert_eq!(f.num_variables(), 50);
        assert_eq!(f.num_clauses(), 100);
        assert!(f
            .clauses()
            .iter()
            .all(|c| c.len() == 3 && c.has_distinct_variables()));
    }

    #[test]
    fn zero_clauses_is_empty_conjunction() {
        let f = generate_random_kcnf(&spec(5, 0, 3, 1)).unwrap();
        assert_eq!(f.num_clauses(), 0);
        assert!(f.is_satisfied_by(&[false; 5]));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_random_kcnf(&spec(30, 120, 3, 77)).unwrap();
        let b = generate_random_kcnf(&spec(30, 120, 3, 77)).unwrap();
        let c = generate_random_kcnf(&spec(30, 120, 3, 78)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn out_of_range_variable_rejected() {
        let clause = Clause::from_dimacs(&[1, -4]).unwrap();
        assert_eq!(
            CnfFormula::new(3, vec![clause]),
            Err(CnfError::VariableOutOfRange {
                variable: 4,
                num_variables: 3
            })
        );
    }

    #[test]
    fn evaluation() {
        let f = CnfFormula::new(
            2,
            vec![
                Clause::from_dimacs(&[1, -2]).unwrap(),
                Clause::from_dimacs(&[2]).unwrap(),
            ],
        )
        .unwrap();
        assert!(f.is_satisfied_by(&[true, true]));
        assert!(!f.is_satisfied_by(&[false, true]));
        assert!(!f.is_satisfied_by(&[true, false]));
    }
}
