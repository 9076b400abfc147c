use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use hardcnf_core::{parse_dimacs, solve, CnfFormula, SolveStats, SolveStatus, SolverConfig};
use serde::Serialize;

use crate::config::{HeuristicArg, PhaseArg};
use crate::error::{CliError, Result};

pub const EXIT_SAT: u8 = 10;
pub const EXIT_UNSAT: u8 = 20;

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// DIMACS CNF file.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = HeuristicArg::Static)]
    pub heuristic: HeuristicArg,
    /// Seed of the random branching heuristic.
    #[arg(long, default_value_t = 0)]
    pub solver_seed: u64,
    /// Polarity tried first at each decision.
    #[arg(long, value_enum, default_value_t = PhaseArg::Positive)]
    pub phase: PhaseArg,
    /// Give up after this many decisions; 0 means unlimited.
    #[arg(long, default_value_t = 0)]
    pub decision_limit: u64,
    /// Print one JSON object instead of solver-style lines.
    #[arg(long, conflicts_with = "quiet")]
    pub json: bool,
    /// Print nothing; exit 10 on SAT, 20 on UNSAT, 0 otherwise.
    #[arg(short, long)]
    pub quiet: bool,
    /// Also print the model as a `v` line when satisfiable.
    #[arg(long)]
    pub model: bool,
}

#[derive(Serialize)]
struct SolveRecord<'a> {
    file: &'a Path,
    variables: u32,
    clauses: usize,
    #[serde(flatten)]
    stats: &'a SolveStats,
}

pub fn read_formula(path: &Path) -> Result<CnfFormula> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    parse_dimacs(&bytes).map_err(|source| CliError::Dimacs {
        path: path.to_path_buf(),
        source,
    })
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<u8> {
    let formula = read_formula(&args.input)?;
    let config = SolverConfig {
        heuristic: args.heuristic.to_heuristic(args.solver_seed),
        first_phase: args.phase.into(),
        decision_limit: (args.decision_limit > 0).then_some(args.decision_limit),
    };
    let mut stats = solve(&formula, &config);
    if args.quiet {
        return Ok(match stats.status {
            SolveStatus::Sat => EXIT_SAT,
            SolveStatus::Unsat => EXIT_UNSAT,
            SolveStatus::LimitExceeded => 0,
        });
    }
    if !args.model {
        stats.model = None;
    }
    let stdout = CliError::io("<stdout>".as_ref());
    if args.json {
        let record = SolveRecord {
            file: &args.input,
            variables: formula.num_variables(),
            clauses: formula.num_clauses(),
            stats: &stats,
        };
        let text = serde_json::to_string(&record).expect("stats serialize");
        writeln!(out, "{text}").map_err(stdout)?;
        return Ok(0);
    }
    let mut text = format!(
        "c variables: {}\nc clauses: {}\nc decisions: {}\nc propagations: {}\n",
        formula.num_variables(),
        formula.num_clauses(),
        stats.decisions,
        stats.propagations
    );
    text += match stats.status {
        SolveStatus::Sat => "s SATISFIABLE\n",
        SolveStatus::Unsat => "s UNSATISFIABLE\n",
        SolveStatus::LimitExceeded => "s UNKNOWN\n",
    };
    if let Some(model) = &stats.model {
        text += "v";
        for (i, &value) in model.iter().enumerate() {
            let v = i as i64 + 1;
            text += &format!(" {}", if value { v } else { -v });
        }
        text += " 0\n";
    }
    out.write_all(text.as_bytes()).map_err(stdout)?;
    Ok(0)
}
