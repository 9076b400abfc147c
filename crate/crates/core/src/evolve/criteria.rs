//! Acceptance rules comparing a candidate against the current formula.

use serde::{Deserialize, Serialize};

use crate::dpll::{SolveStats, SolveStatus};

/// Which solver counter serves as the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Propagations,
    Decisions,
}

impl Metric {
    pub fn score(self, stats: &SolveStats) -> u64 {
        match self {
            Metric::Propagations => stats.propagations,
            Metric::Decisions => stats.decisions,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Propagations => "propagations",
            Metric::Decisions => "decisions",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreRule {
    /// Keep the candidate unless its score dropped. Ties are kept.
    NonDecreasing,
    StrictlyIncreasing,
    /// The score plays no part; only the status constraint decides.
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusConstraint {
    #[default]
    None,
    MustBeSat,
    MustBeUnsat,
}

impl StatusConstraint {
    /// A run that hit the decision limit has no definite status, so it only
    /// passes the unconstrained case.
    pub fn admits(self, status: SolveStatus) -> bool {
        match self {
            StatusConstraint::None => true,
            StatusConstraint::MustBeSat => status == SolveStatus::Sat,
            StatusConstraint::MustBeUnsat => status == SolveStatus::Unsat,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCriterion {
    pub score_rule: ScoreRule,
    #[serde(default)]
    pub status_constraint: StatusConstraint,
}

impl SelectionCriterion {
    pub const fn new(score_rule: ScoreRule, status_constraint: StatusConstraint) -> Self {
        SelectionCriterion {
            score_rule,
            status_constraint,
        }
    }
}

/// True iff the candidate (`new`) passes both the status constraint and the
/// score rule against the current formula (`old`) under `metric`.
pub fn accept(
    old: &SolveStats,
    new: &SolveStats,
    criterion: &SelectionCriterion,
    metric: Metric,
) -> bool {
    if !criterion.status_constraint.admits(new.status) {
        return false;
    }
    let (p, q) = (metric.score(old), metric.score(new));
    match criterion.score_rule {
        ScoreRule::NonDecreasing => q >= p,
        ScoreRule::StrictlyIncreasing => q > p,
        ScoreRule::Ignore => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(status: SolveStatus, propagations: u64) -> SolveStats {
        SolveStats {
            status,
            decisions: propagations / 10,
            propagations,
            model: None,
        }
    }

    const GREEDY: SelectionCriterion =
        SelectionCriterion::new(ScoreRule::NonDecreasing, StatusConstraint::None);

    #[test]
    fn ties_are_kept() {
        let p = stats(SolveStatus::Sat, 100);
        assert!(accept(
            &p,
            &stats(SolveStatus::Sat, 100),
            &GREEDY,
            Metric::Propagations
        ));
    }

    #[test]
    fn lower_score_is_rejected() {
        let p = stats(SolveStatus::Sat, 100);
        assert!(!accept(
            &p,
            &stats(SolveStatus::Sat, 99),
            &GREEDY,
            Metric::Propagations
        ));
    }

    #[test]
    fn strictly_increasing_rejects_ties() {
        let c = SelectionCriterion::new(ScoreRule::StrictlyIncreasing, StatusConstraint::None);
        let p = stats(SolveStatus::Sat, 100);
        assert!(!accept(
            &p,
            &stats(SolveStatus::Sat, 100),
            &c,
            Metric::Propagations
        ));
        assert!(accept(
            &p,
            &stats(SolveStatus::Sat, 101),
            &c,
            Metric::Propagations
        ));
    }

    #[test]
    fn status_constraint_overrides_score() {
        let c = SelectionCriterion::new(ScoreRule::NonDecreasing, StatusConstraint::MustBeUnsat);
        let p = stats(SolveStatus::Unsat, 100);
        assert!(!accept(
            &p,
            &stats(SolveStatus::Sat, 500),
            &c,
            Metric::Propagations
        ));
        assert!(accept(
            &p,
            &stats(SolveStatus::Unsat, 500),
            &c,
            Metric::Propagations
        ));
        let c = SelectionCriterion::new(ScoreRule::NonDecreasing, StatusConstraint::MustBeSat);
        assert!(!accept(
            &p,
            &stats(SolveStatus::Unsat, 500),
            &c,
            Metric::Propagations
        ));
    }

    #[test]
    fn ignore_rule_only_checks_status() {
        let c = SelectionCriterion::new(ScoreRule::Ignore, StatusConstraint::MustBeUnsat);
        let p = stats(SolveStatus::Unsat, 100);
        assert!(accept(
            &p,
            &stats(SolveStatus::Unsat, 1),
            &c,
            Metric::Decisions
        ));
        assert!(!accept(
            &p,
            &stats(SolveStatus::Sat, 1000),
            &c,
            Metric::Decisions
        ));
    }

    #[test]
    fn limit_exceeded_is_scored_at_the_limit() {
        let p = stats(SolveStatus::Sat, 100);
        assert!(accept(
            &p,
            &stats(SolveStatus::LimitExceeded, 100),
            &GREEDY,
            Metric::Propagations
        ));
        assert!(!accept(
            &p,
            &stats(SolveStatus::LimitExceeded, 50),
            &GREEDY,
            Metric::Propagations
        ));
    }

    #[test]
    fn limit_exceeded_never_meets_a_status_constraint() {
        let p = stats(SolveStatus::Unsat, 100);
        for constraint in [StatusConstraint::MustBeUnsat, StatusConstraint::MustBeSat] {
            let c = SelectionCriterion::new(ScoreRule::NonDecreasing, constraint);
            assert!(!accept(
                &p,
                &stats(SolveStatus::LimitExceeded, 900),
                &c,
                Metric::Propagations
            ));
        }
    }

    #[test]
    fn metric_selects_counter() {
        let p = stats(SolveStatus::Sat, 100); // 10 decisions
        let q = SolveStats {
            decisions: 9,
            propagations: 200,
            ..p.clone()
        };
        assert!(accept(&p, &q, &GREEDY, Metric::Propagations));
        assert!(!accept(&p, &q, &GREEDY, Metric::Decisions));
    }
}
