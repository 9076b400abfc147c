use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evolve::run_evolution;
use crate::config::{base_dir, read_toml, BatchSpec, Preset, RunConfig, RunOverrides};
use crate::error::{CliError, Result, EXIT_RUNTIME};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const BATCH_SPEC_FILE: &str = "batch.toml";

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct BatchSourceArgs {
    /// TOML batch spec: `runs`, `seed_base`, `seed_step` and a `[config]` table.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// TOML run config used for every run.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub source: BatchSourceArgs,
    #[command(flatten)]
    pub overrides: RunOverrides,
    /// Number of runs (default 1, or the value in --spec).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Seed of run 0.
    #[arg(long)]
    pub seed_base: Option<u64>,
    /// Seed increment between consecutive runs.
    #[arg(long)]
    pub seed_step: Option<u64>,
    /// Runs executed at once (default: available cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(short = 'o', long)]
    pub out: PathBuf,
    /// Save formula snapshots in every run (see `evolve --snapshot-every`).
    #[arg(long)]
    pub snapshot_every: Option<u64>,
}

/// One row of `summary.csv`. Scores use the metric of the last stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: usize,
    pub seed: u64,
    pub metric: String,
    pub initial_score: Option<u64>,
    pub final_score: Option<u64>,
    pub best_score: Option<u64>,
    pub initial_clauses: Option<usize>,
    pub final_clauses: Option<usize>,
    pub final_status: Option<String>,
    pub generations: Option<u64>,
    pub error: Option<String>,
}

pub fn run_dir_name(run: usize) -> String {
    format!("run-{run:03}")
}

fn load_spec(args: &BatchArgs) -> Result<(BatchSpec, PathBuf)> {
    if args.overrides.seed.is_some() {
        return Err(CliError::Usage(
            "batch runs take their seeds from --seed-base and --seed-step".into(),
        ));
    }
    let single = |config: RunConfig| BatchSpec {
        runs: 1,
        seed_base: config.seed,
        seed_step: 1,
        config,
    };
    let (mut spec, base) = if let Some(path) = &args.source.spec {
        let mut spec: BatchSpec = read_toml(path)?;
        args.overrides.apply(&mut spec.config)?;
        (spec, base_dir(path))
    } else if let Some(path) = &args.source.config {
        let mut config: RunConfig = read_toml(path)?;
        args.overrides.apply(&mut config)?;
        (single(config), base_dir(path))
    } else if let Some(preset) = args.source.preset {
        (single(args.overrides.preset(preset)?), PathBuf::from("."))
    } else {
        return Err(CliError::Usage(
            "one of --spec, --preset or --config is required".into(),
        ));
    };
    if let Some(runs) = args.runs {
        spec.runs = runs;
    }
    if let Some(seed) = args.seed_base {
        spec.seed_base = seed;
    }
    if let Some(step) = args.seed_step {
        spec.seed_step = step;
    }
    spec.validate()?;
    Ok((spec, base))
}

fn run_one(
    spec: &BatchSpec,
    run: usize,
    base: &Path,
    out: &Path,
    snapshot_every: Option<u64>,
    stop: Option<&AtomicBool>,
) -> SummaryRow {
    let config = spec.run_config(run);
    let metric = config.stages.last().map(|s| s.metric);
    let mut row = SummaryRow {
        run,
        seed: config.seed,
        metric: metric.map_or("", |m| m.name()).to_string(),
        initial_score: None,
        final_score: None,
        best_score: None,
        initial_clauses: None,
        final_clauses: None,
        final_status: None,
        generations: None,
        error: None,
    };
    match run_evolution(
        &config,
        base,
        &out.join(run_dir_name(run)),
        snapshot_every,
        stop,
    ) {
        Ok(report) => {
            let m = report.manifest;
            row.initial_score = Some(m.initial.score(m.metric));
            row.final_score = Some(m.final_stats.score(m.metric));
            row.best_score = m.best.map(|b| b.score(m.metric));
            row.initial_clauses = Some(m.initial.clauses);
            row.final_clauses = Some(m.final_stats.clauses);
            row.final_status = Some(m.final_stats.status.as_str().to_string());
            row.generations = Some(m.generations);
            if m.interrupted {
                row.error = Some("interrupted".into());
            }
        }
        Err(err) => {
            log::warn!("run {run} (seed {}): {err}", row.seed);
            row.error = Some(err.to_string());
        }
    }
    row
}

/// Runs every member of the batch, in parallel up to `workers`, and writes
/// `summary.csv` once all are done. Failed runs get a row with `error` set.
pub fn run_batch(
    spec: &BatchSpec,
    base: &Path,
    out: &Path,
    workers: Option<usize>,
    snapshot_every: Option<u64>,
    stop: Option<&AtomicBool>,
) -> Result<Vec<SummaryRow>> {
    spec.validate()?;
    // fail fast on configs that cannot run at all
    spec.run_config(0).resolve(base)?;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let spec_path = out.join(BATCH_SPEC_FILE);
    let text = toml::to_string(spec).map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::write(&spec_path, text).map_err(CliError::io(&spec_path))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        pool = pool.num_threads(w.max(1));
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start workers: {e}")))?;
    let rows: Vec<SummaryRow> = pool.install(|| {
        (0..spec.runs)
            .into_par_iter()
            .map(|run| run_one(spec, run, base, out, snapshot_every, stop))
            .collect()
    });

    let summary = out.join(SUMMARY_FILE);
    let csv_err = |source| CliError::Csv {
        path: summary.clone(),
        source,
    };
    let mut writer = csv::Writer::from_path(&summary).map_err(csv_err)?;
    for row in &rows {
        writer.serialize(row).map_err(csv_err)?;
    }
    writer.flush().map_err(CliError::io(&summary))?;
    Ok(rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    csv::Reader::from_path(path)
        .map_err(csv_err)?
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err)
}

/// Exits with the runtime code if any run failed.
pub fn cmd_batch(args: &BatchArgs, out: &mut dyn Write, stop: Option<&AtomicBool>) -> Result<u8> {
    let (spec, base) = load_spec(args)?;
    let rows = run_batch(
        &spec,
        &base,
        &args.out,
        args.workers,
        args.snapshot_every,
        stop,
    )?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let text = format!(
        "{} runs, {failed} failed; summary in {}\n",
        rows.len(),
        args.out.join(SUMMARY_FILE).display()
    );
    out.write_all(text.as_bytes())
        .map_err(CliError::io("<stdout>".as_ref()))?;
    Ok(if failed > 0 { EXIT_RUNTIME } else { 0 })
}
