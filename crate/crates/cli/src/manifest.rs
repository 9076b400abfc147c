//! The JSON record written next to every evolution run.

use std::path::{Path, PathBuf};

use hardcnf_core::evolve::{Metric, StageSummary};
use hardcnf_core::{CnfFormula, SolveStats, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const INITIAL_FILE: &str = "initial.cnf";
pub const FINAL_FILE: &str = "final.cnf";
pub const BEST_FILE: &str = "best.cnf";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaStats {
    pub status: SolveStatus,
    pub decisions: u64,
    pub propagations: u64,
    pub clauses: usize,
}

impl FormulaStats {
    pub fn new(stats: &SolveStats, formula: &CnfFormula) -> Self {
        FormulaStats {
            status: stats.status,
            decisions: stats.decisions,
            propagations: stats.propagations,
            clauses: formula.num_clauses(),
        }
    }

    pub fn score(&self, metric: Metric) -> u64 {
        match metric {
            Metric::Propagations => self.propagations,
            Metric::Decisions => self.decisions,
        }
    }
}

/// File names relative to the run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub trace: PathBuf,
    pub initial: PathBuf,
    #[serde(rename = "final")]
    pub final_formula: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub rng_algorithm: String,
    /// The complete config; rerunning it reproduces the trace. A DIMACS
    /// starting formula is referenced as the run's own `initial.cnf`.
    pub config: RunConfig,
    pub started_at: String,
    pub finished_at: String,
    pub interrupted: bool,
    pub generations: u64,
    /// Metric of the last stage; `best` is scored with it.
    pub metric: Metric,
    pub initial: FormulaStats,
    #[serde(rename = "final")]
    pub final_stats: FormulaStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<FormulaStats>,
    pub stages: Vec<StageSummary>,
    pub files: ManifestFiles,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(CliError::io(path))
    }
}
