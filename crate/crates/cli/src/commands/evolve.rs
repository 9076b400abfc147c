use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use chrono::{SecondsFormat, Utc};
use clap::Args;
use hardcnf_core::evolve::{evolve_until, EvolutionOutcome, GenerationRecord, TraceSink};
use hardcnf_core::rng::RNG_ALGORITHM;
use hardcnf_core::trace::CsvTraceSink;
use hardcnf_core::{write_dimacs, CnfFormula};

use crate::config::{base_dir, read_toml, InitialSource, Preset, RunConfig, RunOverrides};
use crate::error::{CliError, Result};
use crate::manifest::{
    FormulaStats, ManifestFiles, RunManifest, BEST_FILE, FINAL_FILE, INITIAL_FILE, MANIFEST_FILE,
    SNAPSHOT_DIR, TRACE_FILE,
};

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Start from a named preset.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Start from a TOML run config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Repeat the run recorded in a manifest.
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
}

impl SourceArgs {
    /// The run config with `overrides` applied, and the directory relative
    /// paths in it refer to.
    pub fn load(&self, overrides: &RunOverrides) -> Result<(RunConfig, PathBuf)> {
        if let Some(preset) = self.preset {
            return Ok((overrides.preset(preset)?, PathBuf::from(".")));
        }
        let (mut config, path) = if let Some(path) = &self.config {
            (read_toml::<RunConfig>(path)?, path)
        } else if let Some(path) = &self.from_manifest {
            (RunManifest::read(path)?.config, path)
        } else {
            return Err(CliError::Usage(
                "one of --preset, --config or --from-manifest is required".into(),
            ));
        };
        overrides.apply(&mut config)?;
        Ok((config, base_dir(path)))
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub overrides: RunOverrides,
    /// Output directory (created if missing).
    #[arg(short = 'o', long, required_unless_present = "dump_config")]
    pub out: Option<PathBuf>,
    /// Also save the current formula at recorded generations divisible by this.
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    pub dump_config: bool,
}

/// The trace file plus optional formula snapshots.
struct RunSink<W: Write> {
    trace: CsvTraceSink<W>,
    snapshots: Option<(PathBuf, u64)>,
}

impl<W: Write> TraceSink for RunSink<W> {
    fn record(&mut self, record: &GenerationRecord, current: &CnfFormula) -> std::io::Result<()> {
        self.trace.record(record, current)?;
        if let Some((dir, every)) = &self.snapshots {
            if record.generation.is_multiple_of(*every) {
                let path = dir.join(snapshot_name(record.generation));
                std::fs::write(path, write_dimacs(current))?;
            }
        }
        Ok(())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.trace.flush()
    }
}

pub fn snapshot_name(generation: u64) -> String {
    format!("gen-{generation:09}.cnf")
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn write_formula(path: &Path, formula: &CnfFormula) -> Result<()> {
    std::fs::write(path, write_dimacs(formula)).map_err(CliError::io(path))
}

/// What a finished (or interrupted) run produced.
pub struct RunReport {
    pub manifest: RunManifest,
    pub outcome: EvolutionOutcome,
}

/// Runs `config` and writes trace, formulas and manifest into `out_dir`.
///
/// The config is validated before any file is created. When `stop` ends the
/// run early everything is still written and the manifest says so.
pub fn run_evolution(
    config: &RunConfig,
    base_dir: &Path,
    out_dir: &Path,
    snapshot_every: Option<u64>,
    stop: Option<&AtomicBool>,
) -> Result<RunReport> {
    let resolved = config.resolve(base_dir)?;
    if snapshot_every == Some(0) {
        return Err(CliError::Usage("--snapshot-every must be positive".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;

    let trace_path = out_dir.join(TRACE_FILE);
    let file = File::create(&trace_path).map_err(CliError::io(&trace_path))?;
    let trace = CsvTraceSink::new(BufWriter::new(file)).map_err(CliError::io(&trace_path))?;
    let snapshots = match snapshot_every {
        Some(every) => {
            let dir = out_dir.join(SNAPSHOT_DIR);
            std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
            Some((dir, every))
        }
        None => None,
    };
    let mut sink = RunSink { trace, snapshots };

    let started_at = now();
    let outcome = evolve_until(&resolved, &mut sink, stop);
    sink.flush().map_err(CliError::io(&trace_path))?;
    let outcome = outcome?;
    let finished_at = now();

    write_formula(&out_dir.join(INITIAL_FILE), &outcome.initial)?;
    write_formula(&out_dir.join(FINAL_FILE), &outcome.final_formula)?;
    if let Some(best) = &outcome.best {
        write_formula(&out_dir.join(BEST_FILE), &best.formula)?;
    }

    let mut echo = config.clone();
    echo.record_every = Some(resolved.record_every);
    if let InitialSource::Dimacs(_) = echo.initial {
        echo.initial = InitialSource::Dimacs(INITIAL_FILE.into());
    }
    let metric = resolved.stages.last().expect("validated").metric;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        rng_algorithm: RNG_ALGORITHM.into(),
        config: echo,
        started_at,
        finished_at,
        interrupted: outcome.interrupted,
        generations: outcome.generations,
        metric,
        initial: FormulaStats::new(&outcome.initial_stats, &outcome.initial),
        final_stats: FormulaStats::new(&outcome.final_stats, &outcome.final_formula),
        best: outcome
            .best
            .as_ref()
            .map(|b| FormulaStats::new(&b.stats, &b.formula)),
        stages: outcome.stages.clone(),
        files: ManifestFiles {
            trace: TRACE_FILE.into(),
            initial: INITIAL_FILE.into(),
            final_formula: FINAL_FILE.into(),
            best: outcome.best.as_ref().map(|_| BEST_FILE.into()),
            snapshots: snapshot_every.map(|_| SNAPSHOT_DIR.into()),
        },
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(RunReport { manifest, outcome })
}

fn describe(label: &str, s: &FormulaStats) -> String {
    format!(
        "{label:<8} {:<14} decisions={:<8} propagations={:<9} clauses={}\n",
        s.status.as_str(),
        s.decisions,
        s.propagations,
        s.clauses
    )
}

pub fn cmd_evolve(args: &EvolveArgs, out: &mut dyn Write, stop: Option<&AtomicBool>) -> Result<u8> {
    let (config, base) = args.source.load(&args.overrides)?;
    let stdout = CliError::io("<stdout>".as_ref());
    if args.dump_config {
        let text = toml::to_string(&config).map_err(|e| CliError::Usage(e.to_string()))?;
        out.write_all(text.as_bytes()).map_err(stdout)?;
        return Ok(0);
    }
    let out_dir = args.out.as_ref().expect("clap requires --out");
    let report = run_evolution(&config, &base, out_dir, args.snapshot_every, stop)?;
    let m = &report.manifest;
    let mut text = format!(
        "{} generations, metric {}\n",
        m.generations,
        m.metric.name()
    );
    text += &describe("initial", &m.initial);
    text += &describe("final", &m.final_stats);
    if let Some(best) = &m.best {
        text += &describe("best", best);
    }
    text += &format!("wrote {}\n", out_dir.display());
    out.write_all(text.as_bytes()).map_err(stdout)?;
    if m.interrupted {
        return Err(CliError::Interrupted(out_dir.clone()));
    }
    Ok(0)
}
