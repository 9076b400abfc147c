use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use hardcnf_core::external::{
    default_stat_patterns, transfer_report, ExternalError, ExternalSolverSpec, TransferReport,
};

use super::solve::read_formula;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Args)]
pub struct CrosscheckArgs {
    /// DIMACS file of the starting formula.
    pub initial: PathBuf,
    /// DIMACS file of the evolved formula.
    #[arg(value_name = "FINAL")]
    pub final_formula: PathBuf,
    /// Solver executable, called as `SOLVER [ARGS...] FILE`.
    #[arg(long)]
    pub solver: PathBuf,
    /// Extra argument passed before the file name (repeatable).
    #[arg(long = "arg", value_name = "ARG", allow_hyphen_values = true)]
    pub args: Vec<String>,
    /// Counter pattern as NAME=REGEX (repeatable); replaces the defaults for
    /// decisions, propagations and conflicts.
    #[arg(long = "pattern", value_name = "NAME=REGEX")]
    pub patterns: Vec<String>,
    /// Seconds allowed per solver run.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Also write the JSON report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl CrosscheckArgs {
    pub fn solver_spec(&self) -> Result<ExternalSolverSpec> {
        let stat_patterns = if self.patterns.is_empty() {
            default_stat_patterns()
        } else {
            self.patterns
                .iter()
                .map(|p| match p.split_once('=') {
                    Some((name, re)) if !name.is_empty() => Ok((name.to_string(), re.to_string())),
                    _ => Err(CliError::Usage(format!("pattern {p:?} is not NAME=REGEX"))),
                })
                .collect::<Result<BTreeMap<_, _>>>()?
        };
        let timeout = Duration::try_from_secs_f64(self.timeout)
            .ok()
            .filter(|t| !t.is_zero())
            .ok_or_else(|| CliError::Usage(format!("bad timeout {}", self.timeout)))?;
        let spec = ExternalSolverSpec {
            executable_path: self.solver.clone(),
            extra_args: self.args.clone(),
            stat_patterns,
            timeout,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn render(report: &TransferReport) -> String {
    let mut text = format!(
        "initial  {:<6} {:.3}s\nfinal    {:<6} {:.3}s\n",
        report.initial.status.as_str(),
        report.initial.elapsed.as_secs_f64(),
        report.final_run.status.as_str(),
        report.final_run.elapsed.as_secs_f64(),
    );
    text += &format!(
        "{:<14} {:>12} {:>12} {:>10}\n",
        "counter", "initial", "final", "ratio"
    );
    let names: std::collections::BTreeSet<&String> = report
        .initial
        .counters
        .keys()
        .chain(report.final_run.counters.keys())
        .collect();
    let show = |v: Option<&u64>| v.map_or("-".to_string(), u64::to_string);
    for name in names {
        let ratio = report
            .ratios
            .get(name)
            .map_or("-".to_string(), |r| format!("{r:.3}"));
        text += &format!(
            "{name:<14} {:>12} {:>12} {ratio:>10}\n",
            show(report.initial.counters.get(name)),
            show(report.final_run.counters.get(name)),
        );
    }
    text
}

/// Missing counters only produce warnings; the exit code stays 0.
pub fn cmd_crosscheck(args: &CrosscheckArgs, out: &mut dyn Write) -> Result<u8> {
    let spec = args.solver_spec()?;
    let initial = read_formula(&args.initial)?;
    let final_formula = read_formula(&args.final_formula)?;
    let report = transfer_report(&initial, &final_formula, &spec).map_err(|e| match e {
        ExternalError::Spawn { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
            CliError::Usage(format!("solver executable not found: {}", path.display()))
        }
        other => other.into(),
    })?;
    for name in spec.stat_patterns.keys() {
        for (label, run) in [("initial", &report.initial), ("final", &report.final_run)] {
            if !run.counters.contains_key(name) {
                eprintln!("warning: counter {name:?} absent from the {label} run's output");
            }
        }
    }
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = &args.report {
        std::fs::write(path, format!("{json}\n")).map_err(CliError::io(path))?;
    }
    let text = if args.json {
        json + "\n"
    } else {
        render(&report)
    };
    out.write_all(text.as_bytes())
        .map_err(CliError::io("<stdout>".as_ref()))?;
    Ok(0)
}
