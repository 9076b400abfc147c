//! The generation loop: mutate, measure, accept or restore.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::criteria::{accept, Metric, SelectionCriterion, StatusConstraint};
use super::operators::{apply_operator, ClauseSelection, TransitionOperator};
use super::weights::{VariableWeights, WeightParams};
use crate::cnf::{generate_random_kcnf, CnfError, CnfFormula, RandomFormulaSpec};
use crate::dpll::{solve, SolveStats, SolveStatus, SolverConfig};
use crate::rng::{seeded_stream, SeededRng, EVOLUTION_STREAM};

/// Decision budget per solve used by the presets.
pub const DEFAULT_DECISION_LIMIT: u64 = 1_000_000;
/// Generations without improvement before a break, when breaks are enabled.
pub const DEFAULT_BREAK_WINDOW: u64 = 1000;
pub const DEFAULT_BREAK_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageDuration {
    /// A fixed number of generations.
    Generations(u64),
    /// This many generations per clause of the formula at stage start.
    ClauseFactor(u64),
}

impl StageDuration {
    pub fn resolve(self, clause_count: usize) -> u64 {
        match self {
            StageDuration::Generations(g) => g,
            StageDuration::ClauseFactor(f) => f * clause_count as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagePlan {
    pub operator: TransitionOperator,
    pub metric: Metric,
    pub criterion: SelectionCriterion,
    pub duration: StageDuration,
    #[serde(default)]
    pub clause_selection: ClauseSelection,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialFormula {
    Random(RandomFormulaSpec),
    Given(CnfFormula),
}

impl InitialFormula {
    pub fn materialize(&self) -> Result<CnfFormula, CnfError> {
        match self {
            InitialFormula::Random(spec) => {
                spec.validate()?;
                generate_random_kcnf(spec)
            }
            InitialFormula::Given(f) => Ok(f.clone()),
        }
    }

    /// Width of freshly generated clauses: the random start's width, or the
    /// widest clause of a given formula (3 if it has none).
    pub fn clause_width(&self) -> usize {
        match self {
            InitialFormula::Random(spec) => spec.clause_width,
            InitialFormula::Given(f) => match f.max_clause_width() {
                0 => 3,
                w => w,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub initial: InitialFormula,
    pub solver: SolverConfig,
    pub stages: Vec<StagePlan>,
    pub seed: u64,
    /// Generations without an accepted improvement before a break; `None`
    /// disables breaks.
    pub break_window: Option<u64>,
    pub break_size: usize,
    pub record_every: u64,
    pub archive_best: bool,
    pub weights: WeightParams,
}

impl EvolutionConfig {
    pub fn new(initial: InitialFormula, stages: Vec<StagePlan>, seed: u64) -> Self {
        EvolutionConfig {
            initial,
            solver: SolverConfig {
                decision_limit: Some(DEFAULT_DECISION_LIMIT),
                ..SolverConfig::default()
            },
            stages,
            seed,
            break_window: None,
            break_size: DEFAULT_BREAK_SIZE,
            record_every: 1,
            archive_best: true,
            weights: WeightParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        let invalid = |msg: String| Err(EvolveError::InvalidConfig(msg));
        if self.stages.is_empty() {
            return invalid("at least one stage is required".into());
        }
        for (i, stage) in self.stages.iter().enumerate() {
            if let Err(e) = stage.operator.validate() {
                return invalid(format!("stage {}: {e}", i + 1));
            }
            if matches!(
                stage.duration,
                StageDuration::Generations(0) | StageDuration::ClauseFactor(0)
            ) {
                return invalid(format!("stage {}: duration must be positive", i + 1));
            }
        }
        if self.record_every == 0 {
            return invalid("record_every must be positive".into());
        }
        if self.break_window == Some(0) {
            return invalid("break_window must be positive".into());
        }
        if self.break_size < 2 {
            return invalid("break_size must be at least 2".into());
        }
        if self.solver.decision_limit == Some(0) {
            return invalid("decision_limit must be positive".into());
        }
        let w = self.weights;
        if !(w.floor > 0.0 && w.reward >= 0.0 && w.decay > 0.0 && w.decay <= 1.0) {
            return invalid("weights need floor > 0, reward >= 0, 0 < decay <= 1".into());
        }
        if let InitialFormula::Random(spec) = &self.initial {
            spec.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Event {
    Normal,
    Break,
}

impl Event {
    pub fn as_str(self) -> &'static str {
        match self {
            Event::Normal => "NORMAL",
            Event::Break => "BREAK",
        }
    }
}

/// One sampled generation. The counters describe the current formula after
/// the generation's accept/restore decision, so rejected generations repeat
/// the parent's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u64,
    pub score: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub clauses: usize,
    pub accepted: bool,
    pub status: SolveStatus,
    pub event: Event,
}

/// Receives sampled generation records together with the current formula.
pub trait TraceSink {
    fn record(&mut self, record: &GenerationRecord, current: &CnfFormula) -> std::io::Result<()>;

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl TraceSink for Vec<GenerationRecord> {
    fn record(&mut self, record: &GenerationRecord, _: &CnfFormula) -> std::io::Result<()> {
        self.push(*record);
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &GenerationRecord, _: &CnfFormula) -> std::io::Result<()> {
        Ok(())
    }
}

/// Adapts a closure into a sink.
pub struct FnSink<F>(pub F);

impl<F: FnMut(&GenerationRecord, &CnfFormula)> TraceSink for FnSink<F> {
    fn record(&mut self, record: &GenerationRecord, current: &CnfFormula) -> std::io::Result<()> {
        (self.0)(record, current);
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Formula(#[from] CnfError),
    #[error("stage {stage} requires a {expected:?} formula but the current formula is {found}")]
    StatusPrecondition {
        stage: usize,
        expected: StatusConstraint,
        found: SolveStatus,
    },
    #[error("trace sink failed: {0}")]
    Sink(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Archived {
    pub formula: CnfFormula,
    pub stats: SolveStats,
    pub metric: Metric,
}

impl Archived {
    pub fn score(&self) -> u64 {
        self.metric.score(&self.stats)
    }
}

/// Everything that threads from one generation (and stage) to the next.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    pub formula: CnfFormula,
    pub stats: SolveStats,
    pub weights: VariableWeights,
    pub best: Option<Archived>,
    /// Global generation counter across stages.
    pub generation: u64,
    /// Consecutive generations without an accepted improvement.
    pub stagnation: u64,
}

impl EvolutionState {
    pub fn new(formula: CnfFormula, solver: &SolverConfig, weights: WeightParams) -> Self {
        let stats = solve(&formula, solver);
        EvolutionState {
            weights: VariableWeights::new(formula.num_variables(), weights),
            formula,
            stats,
            best: None,
            generation: 0,
            stagnation: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: usize,
    pub first_generation: u64,
    pub generations: u64,
    pub accepted: u64,
    pub breaks: u64,
    pub start_score: u64,
    pub end_score: u64,
    pub start_clauses: usize,
    pub end_clauses: usize,
}

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub initial: CnfFormula,
    pub initial_stats: SolveStats,
    pub final_formula: CnfFormula,
    pub final_stats: SolveStats,
    pub best: Option<Archived>,
    pub stages: Vec<StageSummary>,
    pub generations: u64,
    /// Set when the stop flag ended the run early.
    pub interrupted: bool,
}

/// Runs one stage starting from `state`. `stage` is 1-based and only used in
/// error messages and summaries.
#[allow(clippy::too_many_arguments)]
pub fn evolve_stage(
    state: &mut EvolutionState,
    plan: &StagePlan,
    stage: usize,
    config: &EvolutionConfig,
    clause_width: usize,
    rng: &mut SeededRng,
    sink: &mut dyn TraceSink,
    stop: Option<&AtomicBool>,
) -> Result<StageSummary, EvolveError> {
    let constraint = plan.criterion.status_constraint;
    if !constraint.admits(state.stats.status) {
        return Err(EvolveError::StatusPrecondition {
            stage,
            expected: constraint,
            found: state.stats.status,
        });
    }
    let metric = plan.metric;
    if config.archive_best && state.best.as_ref().is_none_or(|b| b.metric != metric) {
        state.best = Some(Archived {
            formula: state.formula.clone(),
            stats: state.stats.clone(),
            metric,
        });
    }
    state.stagnation = 0;

    let duration = plan.duration.resolve(state.formula.num_clauses());
    let mut summary = StageSummary {
        stage,
        first_generation: state.generation,
        generations: 0,
        accepted: 0,
        breaks: 0,
        start_score: metric.score(&state.stats),
        end_score: 0,
        start_clauses: state.formula.num_clauses(),
        end_clauses: 0,
    };
    let weighted = plan.clause_selection == ClauseSelection::WeightBiased;

    for _ in 0..duration {
        if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            break;
        }
        let breaking = config.break_window.is_some_and(|w| state.stagnation >= w);
        let operator = if breaking {
            TransitionOperator::MultiReplace(config.break_size)
        } else {
            plan.operator
        };
        let current_score = metric.score(&state.stats);
        let mut accepted = false;
        let mut improved = false;

        match apply_operator(
            &state.formula,
            operator,
            clause_width,
            plan.clause_selection,
            weighted.then_some(&state.weights),
            rng,
        ) {
            Ok(mutation) => {
                let stats = solve(&mutation.formula, &config.solver);
                // Breaks ignore the score but still honour the status constraint.
                accepted = if breaking {
                    constraint.admits(stats.status)
                } else {
                    accept(&state.stats, &stats, &plan.criterion, metric)
                };
                improved = accepted && metric.score(&stats) > current_score;
                if weighted && !breaking {
                    state.weights.update(&mutation.changed, improved);
                }
                if accepted {
                    state.formula = mutation.formula;
                    state.stats = stats;
                }
            }
            Err(err) => log::debug!("generation {}: {err}", state.generation),
        }

        if improved || (breaking && accepted) {
            state.stagnation = 0;
        } else {
            state.stagnation += 1;
        }
        if accepted {
            summary.accepted += 1;
            if breaking {
                summary.breaks += 1;
            }
            if let Some(best) = state.best.as_mut() {
                if metric.score(&state.stats) > best.score() {
                    *best = Archived {
                        formula: state.formula.clone(),
                        stats: state.stats.clone(),
                        metric,
                    };
                }
            }
        }
        if state.generation.is_multiple_of(config.record_every) {
            let record = GenerationRecord {
                generation: state.generation,
                score: metric.score(&state.stats),
                decisions: state.stats.decisions,
                propagations: state.stats.propagations,
                clauses: state.formula.num_clauses(),
                accepted,
                status: state.stats.status,
                event: if breaking {
                    Event::Break
                } else {
                    Event::Normal
                },
            };
            sink.record(&record, &state.formula)?;
        }
        state.generation += 1;
        summary.generations += 1;
    }

    summary.end_score = metric.score(&state.stats);
    summary.end_clauses = state.formula.num_clauses();
    Ok(summary)
}

/// Runs every stage of `config` in order.
pub fn evolve(
    config: &EvolutionConfig,
    sink: &mut dyn TraceSink,
) -> Result<EvolutionOutcome, EvolveError> {
    evolve_until(config, sink, None)
}

/// Like [`evolve`], stopping early (with `interrupted` set) once `stop`
/// becomes true.
pub fn evolve_until(
    config: &EvolutionConfig,
    sink: &mut dyn TraceSink,
    stop: Option<&AtomicBool>,
) -> Result<EvolutionOutcome, EvolveError> {
    config.validate()?;
    let initial = config.initial.materialize()?;
    let clause_width = config.initial.clause_width();
    let mut state = EvolutionState::new(initial.clone(), &config.solver, config.weights);
    let initial_stats = state.stats.clone();
    let mut rng = seeded_stream(config.seed, EVOLUTION_STREAM);

    let mut stages = Vec::with_capacity(config.stages.len());
    for (i, plan) in config.stages.iter().enumerate() {
        if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
            break;
        }
        stages.push(evolve_stage(
            &mut state,
            plan,
            i + 1,
            config,
            clause_width,
            &mut rng,
            sink,
            stop,
        )?);
    }
    sink.flush()?;

    Ok(EvolutionOutcome {
        initial,
        initial_stats,
        generations: state.generation,
        interrupted: stop.is_some_and(|s| s.load(Ordering::Relaxed)),
        final_formula: state.formula,
        final_stats: state.stats,
        best: state.best,
        stages,
    })
}

/// Clause count for a random formula "well above" the satisfiability
/// threshold: `ceil(6 n)` for 3-CNF. Other widths need an explicit ratio.
pub fn initial_ratio_for_unsat(num_variables: u32, clause_width: usize) -> Option<usize> {
    (clause_width == 3).then(|| clauses_for_ratio(num_variables, 6.0))
}

pub fn clauses_for_ratio(num_variables: u32, ratio: f64) -> usize {
    (ratio * f64::from(num_variables)).ceil() as usize
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::evolve::criteria::ScoreRule;
    use crate::evolve::presets::{single_stage, two_stage_unsat};

    fn quick(mut config: EvolutionConfig, limit: u64) -> EvolutionConfig {
        config.solver.decision_limit = Some(limit);
        config
    }

    fn run(config: &EvolutionConfig) -> (EvolutionOutcome, Vec<GenerationRecord>) {
        let mut trace = Vec::new();
        let outcome = evolve(config, &mut trace).unwrap();
        (outcome, trace)
    }

    /// First seed from `from` on whose ratio-6 starting formula is UNSAT.
    fn unsat_seed(n: u32, from: u64) -> u64 {
        (from..)
            .find(|&seed| {
                let f = two_stage_unsat(n, 1, 1, seed)
                    .initial
                    .materialize()
                    .unwrap();
                crate::brute_force_sat(&f).unwrap() == SolveStatus::Unsat
            })
            .unwrap()
    }

    fn accepted_scores(trace: &[GenerationRecord]) -> Vec<u64> {
        trace
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.score)
            .collect()
    }

    #[test]
    fn rejected_generations_keep_the_parent() {
        let config = quick(single_stage(12, 40, 3, 300, 4), 500);
        let mut previous: Option<CnfFormula> = None;
        let mut sink = FnSink(|r: &GenerationRecord, f: &CnfFormula| {
            if let Some(p) = &previous {
                if !r.accepted {
                    assert_eq!(p, f, "generation {}", r.generation);
                }
            }
            previous = Some(f.clone());
        });
        evolve(&config, &mut sink).unwrap();
    }

    #[test]
    fn record_counters_match_the_current_formula() {
        let config = quick(single_stage(10, 30, 3, 120, 9), 500);
        let mut sink = FnSink(|r: &GenerationRecord, f: &CnfFormula| {
            let stats = solve(f, &config.solver);
            assert_eq!(stats.decisions, r.decisions);
            assert_eq!(stats.propagations, r.propagations);
            assert_eq!(stats.status, r.status);
            assert_eq!(f.num_clauses(), r.clauses);
        });
        evolve(&config, &mut sink).unwrap();
    }

    #[test]
    fn unsat_constraint_holds_through_both_stages() {
        let mut config = quick(two_stage_unsat(12, 2, 200, unsat_seed(12, 3)), 2000);
        config.record_every = 1;
        let mut sink = FnSink(|r: &GenerationRecord, f: &CnfFormula| {
            assert_eq!(r.status, SolveStatus::Unsat);
            assert_eq!(crate::brute_force_sat(f).unwrap(), SolveStatus::Unsat);
        });
        let outcome = evolve(&config, &mut sink).unwrap();
        assert_eq!(outcome.final_stats.status, SolveStatus::Unsat);
    }

    #[test]
    fn stage_one_removes_one_clause_per_acceptance() {
        let config = quick(two_stage_unsat(12, 3, 1, unsat_seed(12, 8)), 2000);
        let (outcome, trace) = run(&config);
        let stage1 = &outcome.stages[0];
        assert_eq!(stage1.generations, 3 * 72);
        let mut clauses = 72;
        for r in trace.iter().take(stage1.generations as usize) {
            if r.accepted {
                clauses -= 1;
            }
            assert_eq!(r.clauses, clauses);
        }
        assert_eq!(stage1.end_clauses, 72 - stage1.accepted as usize);
        assert!(stage1.end_clauses < 72);
    }

    #[test]
    fn same_config_same_trace() {
        let seed = unsat_seed(10, 21);
        let config = quick(two_stage_unsat(10, 2, 150, seed), 1000);
        let (a, ta) = run(&config);
        let (b, tb) = run(&config);
        assert_eq!(ta, tb);
        assert_eq!(a.final_formula, b.final_formula);
        let (c, _) = run(&quick(single_stage(10, 60, 3, 150, seed + 1), 1000));
        assert_ne!(a.initial, c.initial);
    }

    #[test]
    fn archive_dominates_every_visited_state() {
        let config = quick(single_stage(14, 50, 3, 400, 6), 300);
        let (outcome, trace) = run(&config);
        let best = outcome.best.unwrap();
        assert!(trace.iter().all(|r| r.score <= best.score()));
        assert!(best.score() >= Metric::Propagations.score(&outcome.final_stats));
        assert_eq!(solve(&best.formula, &config.solver), best.stats);
    }

    #[test]
    fn archive_can_be_disabled() {
        let mut config = quick(single_stage(8, 20, 3, 20, 1), 100);
        config.archive_best = false;
        assert!(run(&config).0.best.is_none());
    }

    #[test]
    fn no_breaks_unless_enabled() {
        let config = quick(single_stage(10, 30, 3, 500, 2), 200);
        let (outcome, trace) = run(&config);
        assert!(trace.iter().all(|r| r.event == Event::Normal));
        assert_eq!(outcome.stages[0].breaks, 0);
    }

    #[test]
    fn breaks_fire_after_stagnation() {
        // strict improvement on a tiny formula stalls quickly
        let mut config = quick(single_stage(6, 10, 3, 600, 5), 200);
        config.stages[0].criterion.score_rule = ScoreRule::StrictlyIncreasing;
        config.break_window = Some(20);
        let (outcome, trace) = run(&config);
        let first = trace
            .iter()
            .position(|r| r.event == Event::Break)
            .expect("a break");
        assert!(first >= 20);
        assert!(trace[..first]
            .iter()
            .rev()
            .take(20)
            .all(|r| !r.accepted || r.generation < 20));
        assert!(outcome.stages[0].breaks > 0);
    }

    #[test]
    fn status_precondition_is_checked() {
        let mut config = quick(single_stage(10, 5, 3, 10, 1), 100);
        config.stages[0].criterion.status_constraint = StatusConstraint::MustBeUnsat;
        match evolve(&config, &mut NullSink) {
            Err(EvolveError::StatusPrecondition {
                stage: 1, found, ..
            }) => {
                assert_eq!(found, SolveStatus::Sat)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_fail_before_running() {
        let base = single_stage(10, 30, 3, 10, 1);
        let mut c = base.clone();
        c.stages.clear();
        assert!(matches!(
            evolve(&c, &mut NullSink),
            Err(EvolveError::InvalidConfig(_))
        ));
        let mut c = base.clone();
        c.record_every = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.stages[0].duration = StageDuration::Generations(0);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.break_size = 1;
        assert!(c.validate().is_err());
        let mut c = base;
        c.initial = InitialFormula::Random(RandomFormulaSpec {
            num_variables: 2,
            num_clauses: 1,
            clause_width: 3,
            seed: 0,
        });
        assert!(matches!(c.validate(), Err(EvolveError::Formula(_))));
    }

    #[test]
    fn record_every_samples_by_global_generation() {
        for (total, every) in [(250u64, 100u64), (300, 100), (7, 3), (10, 1)] {
            let mut config = quick(single_stage(8, 20, 3, total, 3), 100);
            config.record_every = every;
            let (_, trace) = run(&config);
            assert_eq!(trace.len() as u64, total.div_ceil(every));
            assert!(trace.iter().all(|r| r.generation % every == 0));
        }
    }

    #[test]
    fn stop_flag_interrupts() {
        let config = quick(single_stage(8, 20, 3, 1000, 3), 100);
        let stop = AtomicBool::new(false);
        let mut seen = 0;
        let mut sink = FnSink(|_: &GenerationRecord, _: &CnfFormula| {
            seen += 1;
            if seen == 50 {
                stop.store(true, Ordering::Relaxed);
            }
        });
        let outcome = evolve_until(&config, &mut sink, Some(&stop)).unwrap();
        assert!(outcome.interrupted);
        assert_eq!(outcome.generations, 50);
    }

    #[test]
    fn unsat_ratio_defaults() {
        assert_eq!(initial_ratio_for_unsat(50, 3), Some(300));
        assert_eq!(initial_ratio_for_unsat(100, 3), Some(600));
        assert_eq!(initial_ratio_for_unsat(1, 3), Some(6));
        assert_eq!(initial_ratio_for_unsat(50, 4), None);
        assert_eq!(clauses_for_ratio(7, 4.26), 30);
    }

    #[test]
    fn clause_factor_scales_with_start_size() {
        assert_eq!(StageDuration::ClauseFactor(10).resolve(300), 3000);
        assert_eq!(StageDuration::Generations(5).resolve(300), 5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn greedy_accepted_scores_never_drop(seed in any::<u64>(), n in 6u32..14, ratio in 2usize..6) {
            let config = quick(single_stage(n, ratio * n as usize, 3, 150, seed), 300);
            let (_, trace) = run(&config);
            let scores = accepted_scores(&trace);
            prop_assert!(scores.windows(2).all(|w| w[0] <= w[1]));
            // the full trace is monotone too, since rejections repeat the parent
            prop_assert!(trace.windows(2).all(|w| w[0].score <= w[1].score));
        }

        #[test]
        fn decision_metric_is_monotone_too(seed in any::<u64>()) {
            let mut config = quick(single_stage(10, 40, 3, 150, seed), 300);
            config.stages[0].metric = Metric::Decisions;
            let (_, trace) = run(&config);
            prop_assert!(trace.windows(2).all(|w| w[0].score <= w[1].score));
        }
    }
}
