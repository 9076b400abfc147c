//! Run and batch configuration: TOML files, presets and flag overrides.
//!
//! A run config mirrors [`EvolutionConfig`] field by field, except that the
//! starting formula is either a random spec or a DIMACS path, and
//! `record_every` may be left out to get `max(1, total / 10^4)`.
//!
//! ```toml
//! seed = 1
//! break_window = 1000          # omit to disable breaks
//!
//! [initial.random]
//! num_variables = 50
//! num_clauses = 100
//! clause_width = 3
//! seed = 1
//!
//! [solver]
//! heuristic = "static_min_index"
//! decision_limit = 1000000
//!
//! [[stages]]
//! operator = "replace_clause"
//! metric = "propagations"
//! criterion = { score_rule = "non_decreasing", status_constraint = "none" }
//! duration = { generations = 100000 }
//! ```

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use hardcnf_core::dpll::{Heuristic, Phase, SolverConfig};
use hardcnf_core::evolve::{
    presets, EvolutionConfig, InitialFormula, StageDuration, StagePlan, WeightParams,
    DEFAULT_BREAK_SIZE, DEFAULT_DECISION_LIMIT,
};
use hardcnf_core::{parse_dimacs, RandomFormulaSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Trace rows aimed for when `record_every` is not given.
pub const TARGET_TRACE_ROWS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSource {
    Random(RandomFormulaSpec),
    /// Relative paths are resolved against the directory of the file the
    /// config was read from.
    Dimacs(PathBuf),
}

fn default_solver() -> SolverConfig {
    SolverConfig {
        decision_limit: Some(DEFAULT_DECISION_LIMIT),
        ..SolverConfig::default()
    }
}

fn default_break_size() -> usize {
    DEFAULT_BREAK_SIZE
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub initial: InitialSource,
    #[serde(default = "default_solver")]
    pub solver: SolverConfig,
    pub stages: Vec<StagePlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub break_window: Option<u64>,
    #[serde(default = "default_break_size")]
    pub break_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<u64>,
    #[serde(default = "yes")]
    pub archive_best: bool,
    #[serde(default)]
    pub weights: WeightParams,
}

impl RunConfig {
    /// Converts a preset built by the core library. The preset must start
    /// from a random formula.
    pub fn from_evolution(config: &EvolutionConfig) -> Self {
        let InitialFormula::Random(spec) = &config.initial else {
            panic!("presets start from random formulas");
        };
        RunConfig {
            seed: config.seed,
            initial: InitialSource::Random(*spec),
            solver: config.solver,
            stages: config.stages.clone(),
            break_window: config.break_window,
            break_size: config.break_size,
            record_every: None,
            archive_best: config.archive_best,
            weights: config.weights,
        }
    }

    /// Loads the starting formula, resolving a relative DIMACS path against
    /// `base_dir`.
    pub fn initial_formula(&self, base_dir: &Path) -> Result<InitialFormula> {
        Ok(match &self.initial {
            InitialSource::Random(spec) => InitialFormula::Random(*spec),
            InitialSource::Dimacs(path) => {
                let path = base_dir.join(path);
                let bytes = std::fs::read(&path).map_err(CliError::io(&path))?;
                let formula =
                    parse_dimacs(&bytes).map_err(|source| CliError::Dimacs { path, source })?;
                InitialFormula::Given(formula)
            }
        })
    }

    /// Builds the library config; `record_every` is filled in if absent.
    pub fn resolve(&self, base_dir: &Path) -> Result<EvolutionConfig> {
        let initial = self.initial_formula(base_dir)?;
        let start_clauses = match &initial {
            InitialFormula::Random(spec) => spec.num_clauses,
            InitialFormula::Given(f) => f.num_clauses(),
        };
        let mut config = EvolutionConfig::new(initial, self.stages.clone(), self.seed);
        config.solver = self.solver;
        config.break_window = self.break_window;
        config.break_size = self.break_size;
        config.archive_best = self.archive_best;
        config.weights = self.weights;
        config.record_every = self
            .record_every
            .unwrap_or_else(|| default_record_every(&self.stages, start_clauses));
        config.validate()?;
        Ok(config)
    }
}

/// Planned generations of all stages. A clause-factor stage after the first
/// is estimated from the starting clause count.
pub fn total_generations(stages: &[StagePlan], start_clauses: usize) -> u64 {
    stages
        .iter()
        .map(|s| s.duration.resolve(start_clauses))
        .sum()
}

pub fn default_record_every(stages: &[StagePlan], start_clauses: usize) -> u64 {
    (total_generations(stages, start_clauses) / TARGET_TRACE_ROWS).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// One stage, replace a clause, maximize propagations (50 vars, 100 clauses).
    #[value(name = "fig1")]
    Fig1,
    /// Shrink an UNSAT ratio-6 formula, then maximize decisions keeping it UNSAT.
    #[value(name = "two-stage-unsat")]
    TwoStageUnsat,
}

pub const PRESET_NUM_VARIABLES: u32 = 50;
pub const FIG1_NUM_CLAUSES: usize = 100;
pub const PRESET_GENERATIONS: u64 = 100_000;
pub const STAGE1_FACTOR: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeuristicArg {
    #[value(name = "static", alias = "static-min-index")]
    Static,
    #[value(name = "jw", alias = "jeroslow-wang")]
    Jw,
    #[value(name = "random")]
    Random,
}

impl HeuristicArg {
    pub fn to_heuristic(self, seed: u64) -> Heuristic {
        match self {
            HeuristicArg::Static => Heuristic::StaticMinIndex,
            HeuristicArg::Jw => Heuristic::JeroslowWang,
            HeuristicArg::Random => Heuristic::Random { seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseArg {
    Positive,
    Negative,
}

impl From<PhaseArg> for Phase {
    fn from(p: PhaseArg) -> Phase {
        match p {
            PhaseArg::Positive => Phase::Positive,
            PhaseArg::Negative => Phase::Negative,
        }
    }
}

/// Flags that adjust a preset, config file or manifest.
#[derive(Debug, Clone, Default, Args)]
pub struct RunOverrides {
    /// Number of variables of the random starting formula.
    #[arg(short = 'n', long)]
    pub num_variables: Option<u32>,
    /// Clauses of the random starting formula (two-stage default: 6 n).
    #[arg(short = 'm', long)]
    pub num_clauses: Option<usize>,
    /// Clause width of the random starting formula.
    #[arg(short = 'k', long)]
    pub clause_width: Option<usize>,
    /// Generations of the last stage.
    #[arg(short = 'g', long)]
    pub generations: Option<u64>,
    /// Generations per starting clause of the first (clause-removal) stage.
    #[arg(long)]
    pub stage1_factor: Option<u64>,
    /// Seed of the evolution and of the random starting formula.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Decision budget per solve; 0 means unlimited.
    #[arg(long)]
    pub decision_limit: Option<u64>,
    #[arg(long, value_enum)]
    pub heuristic: Option<HeuristicArg>,
    /// Seed of the random branching heuristic.
    #[arg(long, default_value_t = 0)]
    pub solver_seed: u64,
    /// Write a trace row every this many generations.
    #[arg(long)]
    pub record_every: Option<u64>,
    /// Generations without improvement before a break; 0 disables breaks.
    #[arg(long)]
    pub break_window: Option<u64>,
    /// Clauses replaced by a break.
    #[arg(long)]
    pub break_size: Option<usize>,
    /// Start from this DIMACS file instead of a random formula.
    #[arg(long)]
    pub initial: Option<PathBuf>,
}

impl RunOverrides {
    pub fn preset(&self, preset: Preset) -> Result<RunConfig> {
        let n = self.num_variables.unwrap_or(PRESET_NUM_VARIABLES);
        let k = self.clause_width.unwrap_or(3);
        let seed = self.seed.unwrap_or(1);
        let generations = self.generations.unwrap_or(PRESET_GENERATIONS);
        let config = match preset {
            Preset::Fig1 => {
                let m = self.num_clauses.unwrap_or(FIG1_NUM_CLAUSES);
                presets::single_stage(n, m, k, generations, seed)
            }
            Preset::TwoStageUnsat => {
                if k != 3 && self.num_clauses.is_none() {
                    return Err(CliError::Usage(
                        "two-stage-unsat needs -m for clause widths other than 3".into(),
                    ));
                }
                let mut c = presets::two_stage_unsat(
                    n,
                    self.stage1_factor.unwrap_or(STAGE1_FACTOR),
                    generations,
                    seed,
                );
                if let InitialFormula::Random(spec) = &mut c.initial {
                    spec.clause_width = k;
                    if let Some(m) = self.num_clauses {
                        spec.num_clauses = m;
                    }
                }
                c
            }
        };
        let mut run = RunConfig::from_evolution(&config);
        self.apply(&mut run)?;
        Ok(run)
    }

    /// Applies every given flag to `config`.
    pub fn apply(&self, config: &mut RunConfig) -> Result<()> {
        if let Some(path) = &self.initial {
            let path = std::path::absolute(path).map_err(CliError::io(path))?;
            config.initial = InitialSource::Dimacs(path);
        }
        let shape = [
            self.num_variables.map(|_| "-n"),
            self.num_clauses.map(|_| "-m"),
            self.clause_width.map(|_| "-k"),
        ];
        match &mut config.initial {
            InitialSource::Random(spec) => {
                if let Some(n) = self.num_variables {
                    spec.num_variables = n;
                }
                if let Some(m) = self.num_clauses {
                    spec.num_clauses = m;
                }
                if let Some(k) = self.clause_width {
                    spec.clause_width = k;
                }
                if let Some(seed) = self.seed {
                    spec.seed = seed;
                }
            }
            InitialSource::Dimacs(path) => {
                if let Some(flag) = shape.into_iter().flatten().next() {
                    return Err(CliError::Usage(format!(
                        "{flag} only applies to a random starting formula, not {}",
                        path.display()
                    )));
                }
            }
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(g) = self.generations {
            let last = config
                .stages
                .last_mut()
                .ok_or_else(|| CliError::Usage("config has no stages".into()))?;
            last.duration = StageDuration::Generations(g);
        }
        if let Some(f) = self.stage1_factor {
            match config.stages.first_mut() {
                Some(first) if matches!(first.duration, StageDuration::ClauseFactor(_)) => {
                    first.duration = StageDuration::ClauseFactor(f);
                }
                _ => {
                    return Err(CliError::Usage(
                        "--stage1-factor needs a first stage measured in clause factors".into(),
                    ))
                }
            }
        }
        if let Some(limit) = self.decision_limit {
            config.solver.decision_limit = (limit > 0).then_some(limit);
        }
        if let Some(h) = self.heuristic {
            config.solver.heuristic = h.to_heuristic(self.solver_seed);
        }
        if let Some(r) = self.record_every {
            config.record_every = Some(r);
        }
        if let Some(w) = self.break_window {
            config.break_window = (w > 0).then_some(w);
        }
        if let Some(b) = self.break_size {
            config.break_size = b;
        }
        Ok(())
    }
}

/// Independent runs of one config with seeds `seed_base + i * seed_step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSpec {
    pub runs: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "one")]
    pub seed_step: u64,
    pub config: RunConfig,
}

fn one() -> u64 {
    1
}

impl BatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(CliError::Usage("a batch needs at least one run".into()));
        }
        if self.runs > 1 && self.seed_step == 0 {
            return Err(CliError::Usage(
                "seed_step 0 would repeat the same seed".into(),
            ));
        }
        Ok(())
    }

    pub fn seed(&self, run: usize) -> u64 {
        self.seed_base
            .wrapping_add(self.seed_step.wrapping_mul(run as u64))
    }

    /// The config of run `run`: both seeds replaced by the run's seed.
    pub fn run_config(&self, run: usize) -> RunConfig {
        let mut config = self.config.clone();
        let seed = self.seed(run);
        config.seed = seed;
        if let InitialSource::Random(spec) = &mut config.initial {
            spec.seed = seed;
        }
        config
    }
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    toml::from_str(&text).map_err(|source| CliError::Toml {
        path: path.to_path_buf(),
        source,
    })
}

/// Directory that relative paths inside `file` are resolved against.
pub fn base_dir(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}
