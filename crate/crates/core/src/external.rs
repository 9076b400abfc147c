//! Measuring formulas with an external DIMACS solver executable.
//!
//! The solver is invoked as `<executable> [extra_args...] <file.cnf>`. Its
//! status comes from an `s SATISFIABLE` / `s UNSATISFIABLE` line on standard
//! output, or failing that from exit code 10 / 20. Counters are read with
//! per-solver regexes: on the first line a pattern matches, the first integer
//! after the match is the counter's value.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, ExitStatus, Stdio};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use crate::cnf::CnfFormula;
use crate::dimacs::write_dimacs;
use crate::dpll::SolveStatus;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSolverSpec {
    pub executable_path: PathBuf,
    #[serde(default)]
    pub extra_args: Vec<String>,
    /// Counter name to regex.
    pub stat_patterns: BTreeMap<String, String>,
    #[serde(with = "secs_f64")]
    pub timeout: Duration,
}

/// Patterns for the `name : value` statistics lines printed by minisat,
/// cryptominisat and this crate's own command-line solver, with or without
/// a leading `c`.
pub fn default_stat_patterns() -> BTreeMap<String, String> {
    ["decisions", "propagations", "conflicts"]
        .into_iter()
        .map(|name| (name.to_string(), format!(r"(?i)^\s*(c\s+)?{name}\s*:")))
        .collect()
}

impl ExternalSolverSpec {
    pub fn new(executable_path: impl Into<PathBuf>) -> Self {
        ExternalSolverSpec {
            executable_path: executable_path.into(),
            extra_args: Vec::new(),
            stat_patterns: default_stat_patterns(),
            timeout: Duration::from_secs(60),
        }
    }

    pub fn validate(&self) -> Result<(), ExternalError> {
        self.compile_patterns().map(|_| ())
    }

    fn compile_patterns(&self) -> Result<Vec<(String, Regex)>, ExternalError> {
        if self.stat_patterns.is_empty() {
            return Err(ExternalError::InvalidSpec("no stat patterns".into()));
        }
        if self.timeout.is_zero() {
            return Err(ExternalError::InvalidSpec(
                "timeout must be positive".into(),
            ));
        }
        self.stat_patterns
            .iter()
            .map(|(name, pattern)| {
                Regex::new(pattern)
                    .map(|re| (name.clone(), re))
                    .map_err(|source| ExternalError::Pattern {
                        name: name.clone(),
                        source,
                    })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalRunResult {
    pub status: SolveStatus,
    /// Counters whose pattern matched; unmatched ones are absent.
    pub counters: BTreeMap<String, u64>,
    /// Captured standard output.
    pub raw_output: String,
    #[serde(with = "secs_f64")]
    pub elapsed: Duration,
}

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("invalid solver spec: {0}")]
    InvalidSpec(String),
    #[error("stat pattern {name:?}: {source}")]
    Pattern { name: String, source: regex::Error },
    #[error("cannot run {path}: {source}")]
    Spawn {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("solver I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver timed out after {timeout:?}; output so far:\n{output}")]
    Timeout { timeout: Duration, output: String },
    #[error("solver terminated abnormally ({status}); output:\n{output}")]
    Failed { status: ExitStatus, output: String },
    #[error("solver reported no status (exit {status}); output:\n{output}")]
    UnknownStatus { status: ExitStatus, output: String },
}

/// Collects a pipe on a background thread into a shared buffer, so partial
/// output is available even when the child is killed.
fn drain<R: Read + Send + 'static>(mut pipe: R) -> Arc<Mutex<Vec<u8>>> {
    let buffer = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&buffer);
    thread::spawn(move || {
        let mut chunk = [0u8; 8192];
        while let Ok(n) = pipe.read(&mut chunk) {
            if n == 0 {
                break;
            }
            sink.lock()
                .expect("pipe buffer")
                .extend_from_slice(&chunk[..n]);
        }
    });
    buffer
}

fn snapshot(buffer: &Arc<Mutex<Vec<u8>>>) -> String {
    String::from_utf8_lossy(&buffer.lock().expect("pipe buffer")).into_owned()
}

/// Waits briefly for a reader thread to hit end of file.
fn settle(buffer: &Arc<Mutex<Vec<u8>>>) {
    let deadline = Instant::now() + Duration::from_millis(500);
    while Arc::strong_count(buffer) > 1 && Instant::now() < deadline {
        thread::sleep(Duration::from_millis(1));
    }
}

/// The status announced by an `s ...` line, if any.
fn status_line(output: &str) -> Option<Option<SolveStatus>> {
    output.lines().find_map(|line| {
        let rest = line.trim_end().strip_prefix("s ")?;
        Some(match rest.trim() {
            "SATISFIABLE" => Some(SolveStatus::Sat),
            "UNSATISFIABLE" => Some(SolveStatus::Unsat),
            _ => None,
        })
    })
}

fn extract_counter(output: &str, re: &Regex) -> Option<u64> {
    output.lines().find_map(|line| {
        let m = re.find(line)?;
        let digits: String = line[m.end()..]
            .chars()
            .skip_while(|c| !c.is_ascii_digit())
            .take_while(char::is_ascii_digit)
            .collect();
        digits.parse().ok()
    })
}

/// Writes `formula` to a temporary DIMACS file and runs the solver on it.
pub fn run_external(
    formula: &CnfFormula,
    spec: &ExternalSolverSpec,
) -> Result<ExternalRunResult, ExternalError> {
    let patterns = spec.compile_patterns()?;
    let mut file = tempfile::Builder::new()
        .prefix("hardcnf-")
        .suffix(".cnf")
        .tempfile()?;
    file.write_all(write_dimacs(formula).as_bytes())?;
    file.flush()?;

    let started = Instant::now();
    let mut child = Command::new(&spec.executable_path)
        .args(&spec.extra_args)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| ExternalError::Spawn {
            path: spec.executable_path.clone(),
            source,
        })?;
    let stdout = drain(child.stdout.take().expect("piped stdout"));
    let stderr = drain(child.stderr.take().expect("piped stderr"));

    let Some(exit) = child.wait_timeout(spec.timeout)? else {
        child.kill().ok();
        child.wait().ok();
        settle(&stdout);
        return Err(ExternalError::Timeout {
            timeout: spec.timeout,
            output: snapshot(&stdout) + &snapshot(&stderr),
        });
    };
    let elapsed = started.elapsed();
    settle(&stdout);
    settle(&stderr);
    let raw_output = snapshot(&stdout);

    let status = match (status_line(&raw_output), exit.code()) {
        (Some(Some(status)), _) => status,
        (None, Some(10)) => SolveStatus::Sat,
        (None, Some(20)) => SolveStatus::Unsat,
        (_, None) => {
            return Err(ExternalError::Failed {
                status: exit,
                output: raw_output + &snapshot(&stderr),
            })
        }
        _ => {
            return Err(ExternalError::UnknownStatus {
                status: exit,
                output: raw_output + &snapshot(&stderr),
            })
        }
    };

    let mut counters = BTreeMap::new();
    for (name, re) in &patterns {
        match extract_counter(&raw_output, re) {
            Some(value) => {
                counters.insert(name.clone(), value);
            }
            None => log::warn!(
                "{}: counter {name:?} not found in solver output",
                spec.executable_path.display()
            ),
        }
    }
    Ok(ExternalRunResult {
        status,
        counters,
        raw_output,
        elapsed,
    })
}

/// Both runs of a cross-solver comparison and `final / initial` per counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub initial: ExternalRunResult,
    #[serde(rename = "final")]
    pub final_run: ExternalRunResult,
    /// Present for counters found in both runs. `0/0` counts as 1.
    pub ratios: BTreeMap<String, f64>,
}

pub fn transfer_report(
    initial: &CnfFormula,
    final_formula: &CnfFormula,
    spec: &ExternalSolverSpec,
) -> Result<TransferReport, ExternalError> {
    let initial = run_external(initial, spec)?;
    let final_run = run_external(final_formula, spec)?;
    let ratios = initial
        .counters
        .iter()
        .filter_map(|(name, &a)| {
            let b = *final_run.counters.get(name)?;
            let ratio = if a == 0 && b == 0 {
                1.0
            } else {
                b as f64 / a as f64
            };
            Some((name.clone(), ratio))
        })
        .collect();
    Ok(TransferReport {
        initial,
        final_run,
        ratios,
    })
}

mod secs_f64 {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use std::os::unix::fs::PermissionsExt;
    use std::path::Path;

    use super::*;
    use crate::cnf::Clause;

    fn formula(n: u32, clauses: &[&[i64]]) -> CnfFormula {
        CnfFormula::new(
            n,
            clauses
                .iter()
                .map(|c| Clause::from_dimacs(c).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
        path
    }

    /// A tiny "solver": UNSAT iff the file contains both `1 0` and `-1 0`.
    const TOY: &str = r#"
if grep -qx -- '-1 0' "$1" && grep -qx '1 0' "$1"; then
  echo "c decisions : 2051"
  echo "c propagations: 7 (0.1/s)"
  echo "s UNSATISFIABLE"
  exit 20
fi
echo "c decisions : 91"
echo "s SATISFIABLE"
exit 10"#;

    #[test]
    fn status_and_counters_from_output() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExternalSolverSpec::new(script(dir.path(), "toy", TOY));
        let unsat = run_external(&formula(1, &[&[1], &[-1]]), &spec).unwrap();
        assert_eq!(unsat.status, SolveStatus::Unsat);
        assert_eq!(unsat.counters["decisions"], 2051);
        assert_eq!(unsat.counters["propagations"], 7);
        assert!(!unsat.counters.contains_key("conflicts"));

        let sat = run_external(&formula(1, &[&[1]]), &spec).unwrap();
        assert_eq!(sat.status, SolveStatus::Sat);
        assert_eq!(sat.counters["decisions"], 91);
    }

    #[test]
    fn exit_codes_are_a_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let f = formula(1, &[&[1]]);
        let sat = ExternalSolverSpec::new(script(dir.path(), "ten", "exit 10"));
        assert_eq!(run_external(&f, &sat).unwrap().status, SolveStatus::Sat);
        let unsat = ExternalSolverSpec::new(script(dir.path(), "twenty", "exit 20"));
        assert_eq!(run_external(&f, &unsat).unwrap().status, SolveStatus::Unsat);
        // an explicit status line wins over the exit code
        let both = ExternalSolverSpec::new(script(
            dir.path(),
            "both",
            "echo 's UNSATISFIABLE'; exit 10",
        ));
        assert_eq!(run_external(&f, &both).unwrap().status, SolveStatus::Unsat);
    }

    #[test]
    fn missing_status_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let f = formula(1, &[&[1]]);
        let quiet = ExternalSolverSpec::new(script(dir.path(), "quiet", "echo hello; exit 0"));
        assert!(matches!(
            run_external(&f, &quiet),
            Err(ExternalError::UnknownStatus { .. })
        ));
        let unknown =
            ExternalSolverSpec::new(script(dir.path(), "unknown", "echo 's UNKNOWN'; exit 10"));
        assert!(matches!(
            run_external(&f, &unknown),
            Err(ExternalError::UnknownStatus { .. })
        ));
    }

    #[test]
    fn timeout_kills_the_solver() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExternalSolverSpec::new(script(
            dir.path(),
            "slow",
            "echo 'c starting'\nexec sleep 30",
        ));
        spec.timeout = Duration::from_millis(200);
        let started = Instant::now();
        match run_external(&formula(1, &[&[1]]), &spec) {
            Err(ExternalError::Timeout { output, .. }) => assert!(output.contains("c starting")),
            other => panic!("expected timeout, got {other:?}"),
        }
        assert!(started.elapsed() < Duration::from_secs(10));
    }

    #[test]
    fn missing_executable_is_a_spawn_error() {
        let spec = ExternalSolverSpec::new("/nonexistent/solver");
        assert!(matches!(
            run_external(&formula(1, &[&[1]]), &spec),
            Err(ExternalError::Spawn { .. })
        ));
    }

    #[test]
    fn file_handed_over_is_the_dimacs_text() {
        let dir = tempfile::tempdir().unwrap();
        let copy = dir.path().join("seen.cnf");
        let body = format!("cp \"$2\" '{}'\necho 's SATISFIABLE'", copy.display());
        let mut spec = ExternalSolverSpec::new(script(dir.path(), "copy", &body));
        spec.extra_args = vec!["--verbose".into()];
        let f = formula(4, &[&[1, -2, 3], &[-4], &[2, 4]]);
        run_external(&f, &spec).unwrap();
        assert_eq!(std::fs::read_to_string(&copy).unwrap(), write_dimacs(&f));
    }

    #[test]
    fn extra_args_precede_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"[ "$1" = "-x" ] && [ "$2" = "y" ] && case "$3" in *.cnf) echo 's SATISFIABLE';; esac"#;
        let mut spec = ExternalSolverSpec::new(script(dir.path(), "args", body));
        spec.extra_args = vec!["-x".into(), "y".into()];
        assert_eq!(
            run_external(&formula(1, &[&[1]]), &spec).unwrap().status,
            SolveStatus::Sat
        );
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = ExternalSolverSpec::new("/bin/true");
        spec.stat_patterns.clear();
        assert!(matches!(
            spec.validate(),
            Err(ExternalError::InvalidSpec(_))
        ));
        let mut spec = ExternalSolverSpec::new("/bin/true");
        spec.timeout = Duration::ZERO;
        assert!(spec.validate().is_err());
        let mut spec = ExternalSolverSpec::new("/bin/true");
        spec.stat_patterns.insert("bad".into(), "(".into());
        assert!(matches!(
            spec.validate(),
            Err(ExternalError::Pattern { .. })
        ));
    }

    #[test]
    fn counter_is_the_first_integer_after_the_match() {
        let re = Regex::new(r"c decisions").unwrap();
        assert_eq!(extract_counter("c decisions : 2051", &re), Some(2051));
        assert_eq!(
            extract_counter("c other 5\nc decisions   : 12 (3 /sec)", &re),
            Some(12)
        );
        assert_eq!(extract_counter("c decisions : none", &re), None);
        let defaults = default_stat_patterns();
        let re = Regex::new(&defaults["decisions"]).unwrap();
        assert_eq!(
            extract_counter("decisions             : 33 (0 % random)", &re),
            Some(33)
        );
        assert_eq!(extract_counter("c decisions: 4", &re), Some(4));
    }

    #[test]
    fn identical_formulas_give_unit_ratios() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExternalSolverSpec::new(script(dir.path(), "toy", TOY));
        let f = formula(1, &[&[1], &[-1]]);
        let report = transfer_report(&f, &f, &spec).unwrap();
        assert_eq!(report.ratios["decisions"], 1.0);
        assert_eq!(report.ratios["propagations"], 1.0);

        let sat = formula(1, &[&[1]]);
        let report = transfer_report(&sat, &f, &spec).unwrap();
        assert!((report.ratios["decisions"] - 2051.0 / 91.0).abs() < 1e-9);
        assert!(!report.ratios.contains_key("propagations"));
    }

    #[test]
    fn spec_serializes_timeout_in_seconds() {
        let mut spec = ExternalSolverSpec::new("/usr/bin/solver");
        spec.timeout = Duration::from_millis(2500);
        let json = serde_json::to_value(&spec).unwrap();
        assert_eq!(json["timeout"], 2.5);
        let back: ExternalSolverSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);
    }
}
