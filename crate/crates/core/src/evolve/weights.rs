//! Per-variable weights steering which clauses get modified.
//!
//! A move that improves the score rewards the variables of the clause it
//! changed; a move that does not improve it decays them. Weight-biased
//! selection then prefers clauses over heavy variables.

use serde::{Deserialize, Serialize};

use crate::cnf::{Clause, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightParams {
    /// Added to each variable of an improving clause.
    pub reward: f64,
    /// Multiplier applied to each variable of a non-improving clause.
    pub decay: f64,
    /// Lower bound, also the initial weight.
    pub floor: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams {
            reward: 1.0,
            decay: 0.95,
            floor: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableWeights {
    weights: Vec<f64>,
    params: WeightParams,
}

impl VariableWeights {
    pub fn new(num_variables: u32, params: WeightParams) -> Self {
        VariableWeights {
            weights: vec![params.floor; num_variables as usize],
            params,
        }
    }

    pub fn get(&self, var: Variable) -> f64 {
        self.weights[var.offset()]
    }

    pub fn set(&mut self, var: Variable, weight: f64) {
        self.weights[var.offset()] = weight.max(self.params.floor);
    }

    pub fn params(&self) -> WeightParams {
        self.params
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of the weights of the clause's literals.
    pub fn clause_weight(&self, clause: &Clause) -> f64 {
        clause.variables().map(|v| self.get(v)).sum()
    }

    /// In-place form of [`update_weights`].
    pub fn update(&mut self, changed: &Clause, improved: bool) {
        let WeightParams {
            reward,
            decay,
            floor,
        } = self.params;
        for var in changed.variables() {
            let w = &mut self.weights[var.offset()];
            *w = if improved {
                *w + reward
            } else {
                (*w * decay).max(floor)
            };
        }
    }
}

/// Rewards (`improved`) or decays the variables of `changed_clause`; all
/// other weights are left as they were.
pub fn update_weights(
    weights: &VariableWeights,
    changed_clause: &Clause,
    improved: bool,
) -> VariableWeights {
    let mut next = weights.clone();
    next.update(changed_clause, improved);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::operators::{select_clause_index, ClauseSelection};
    use crate::rng::seeded_rng;
    use crate::CnfFormula;

    fn clause(lits: &[i64]) -> Clause {
        Clause::from_dimacs(lits).unwrap()
    }

    #[test]
    fn improvement_adds_reward() {
        let w = VariableWeights::new(5, WeightParams::default());
        let w = update_weights(&w, &clause(&[1, -2, 3]), true);
        assert_eq!(w.as_slice(), &[2.0, 2.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn decay_is_clamped_at_floor() {
        let w = VariableWeights::new(5, WeightParams::default());
        let w = update_weights(&w, &clause(&[1, -2, 3]), false);
        assert_eq!(w.as_slice(), &[1.0; 5]);
    }

    #[test]
    fn repeated_improvement_accumulates() {
        let mut w = VariableWeights::new(4, WeightParams::default());
        let c = clause(&[2, 4]);
        for _ in 0..7 {
            w.update(&c, true);
        }
        assert_eq!(w.as_slice(), &[1.0, 8.0, 1.0, 8.0]);
        w.update(&c, false);
        assert!((w.get(Variable::new(2)) - 8.0 * 0.95).abs() < 1e-12);
    }

    #[test]
    fn equal_weights_select_uniformly() {
        let f = CnfFormula::new(
            6,
            vec![
                clause(&[1, 2, 3]),
                clause(&[4, 5, 6]),
                clause(&[1, 5, -6]),
                clause(&[-2, 3, 4]),
            ],
        )
        .unwrap();
        let w = VariableWeights::new(6, WeightParams::default());
        let mut rng = seeded_rng(77);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[select_clause_index(&f, ClauseSelection::WeightBiased, Some(&w), &mut rng)
                .unwrap()] += 1;
        }
        // chi-square with 3 degrees of freedom; 16.27 is the 0.001 critical value
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 16.27, "chi2 {chi2} counts {counts:?}");
    }

    #[test]
    fn selection_follows_weight_ratio() {
        // clause 0 weighs 3.0 (three variables at 1.0), clause 1 weighs 1.0
        let f = CnfFormula::new(4, vec![clause(&[1, 2, 3]), clause(&[4])]).unwrap();
        let w = VariableWeights::new(4, WeightParams::default());
        let mut rng = seeded_rng(5);
        let draws = 100_000;
        let first = (0..draws)
            .filter(|_| {
                select_clause_index(&f, ClauseSelection::WeightBiased, Some(&w), &mut rng).unwrap()
                    == 0
            })
            .count();
        let ratio = first as f64 / (draws - first) as f64;
        assert!((ratio - 3.0).abs() <= 0.15, "ratio {ratio}");
    }
}
