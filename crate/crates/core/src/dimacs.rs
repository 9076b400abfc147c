//! DIMACS CNF reading and writing.
//!
//! The reader accepts the usual competition layout: `c` comment lines, one
//! `p cnf <vars> <clauses>` header, then whitespace separated literals where
//! `0` terminates a clause. Clauses may span lines. A `%` line (found at the
//! end of SATLIB benchmark files) ends the input.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, Literal};

#[derive(Debug, Error)]
pub enum DimacsError {
    #[error("line {line}: literal before the `p cnf` header")]
    MissingHeader { line: usize },
    #[error("no `p cnf` header found")]
    NoHeader,
    #[error("line {line}: malformed header `{text}`")]
    InvalidHeader { line: usize, text: String },
    #[error("line {line}: second `p` header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: `{token}` is not an integer literal")]
    InvalidToken { line: usize, token: String },
    #[error("line {line}: variable {variable} out of range (header declares {num_variables})")]
    VariableOutOfRange {
        line: usize,
        variable: u64,
        num_variables: u32,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses DIMACS text from a byte slice.
pub fn parse_dimacs(text: &[u8]) -> Result<CnfFormula, DimacsError> {
    parse_dimacs_reader(text)
}

pub fn parse_dimacs_str(text: &str) -> Result<CnfFormula, DimacsError> {
    parse_dimacs_reader(text.as_bytes())
}

pub fn parse_dimacs_reader<R: BufRead>(reader: R) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut pending: Vec<Literal> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(DimacsError::DuplicateHeader { line: lineno });
            }
            header = Some(parse_header(trimmed, lineno)?);
            if let Some((_, m)) = header {
                clauses.reserve(m);
            }
            continue;
        }
        let (num_variables, _) = header.ok_or(DimacsError::MissingHeader { line: lineno })?;
        for token in trimmed.split_whitespace() {
            let value: i64 = token.parse().map_err(|_| DimacsError::InvalidToken {
                line: lineno,
                token: token.to_string(),
            })?;
            if value == 0 {
                if token.starts_with('-') {
                    return Err(DimacsError::InvalidToken {
                        line: lineno,
                        token: token.to_string(),
                    });
                }
                clauses.push(Clause::new(std::mem::take(&mut pending)));
                continue;
            }
            let variable = value.unsigned_abs();
            if variable > u64::from(num_variables) {
                return Err(DimacsError::VariableOutOfRange {
                    line: lineno,
                    variable,
                    num_variables,
                });
            }
            pending.push(Literal::from_dimacs(value).expect("nonzero and in range"));
        }
    }

    let (num_variables, declared) = header.ok_or(DimacsError::NoHeader)?;
    if !pending.is_empty() {
        log::warn!("last clause is missing its terminating 0; keeping it");
        clauses.push(Clause::new(pending));
    }
    if clauses.len() != declared {
        log::warn!(
            "header declares {declared} clauses but {} were read; using the clauses read",
            clauses.len()
        );
    }
    if let Some(i) = clauses.iter().position(|c| !c.has_distinct_variables()) {
        log::warn!("clause {} repeats a variable", i + 1);
    }
    Ok(CnfFormula::new(num_variables, clauses).expect("variables checked while parsing"))
}

fn parse_header(text: &str, line: usize) -> Result<(u32, usize), DimacsError> {
    let bad = || DimacsError::InvalidHeader {
        line,
        text: text.to_string(),
    };
    let parts: Vec<&str> = text.split_whitespace().collect();
    match parts.as_slice() {
        ["p", "cnf", n, m] => {
            let n = n.parse().map_err(|_| bad())?;
            let m = m.parse().map_err(|_| bad())?;
            Ok((n, m))
        }
        _ => Err(bad()),
    }
}

/// Renders the formula as DIMACS text: header, then one clause per line in
/// stored order. An empty clause is written as a bare `0` line.
pub fn write_dimacs(formula: &CnfFormula) -> String {
    let mut out = Vec::new();
    write_dimacs_to(formula, &mut out).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("DIMACS output is ASCII")
}

pub fn write_dimacs_to<W: Write>(formula: &CnfFormula, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "p cnf {} {}",
        formula.num_variables(),
        formula.num_clauses()
    )?;
    for clause in formula.clauses() {
        for lit in clause.literals() {
            write!(out, "{} ", lit.to_dimacs())?;
        }
        writeln!(out, "0")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{generate_random_kcnf, RandomFormulaSpec, Variable};

    #[test]
    fn parses_minimal_file() {
        let f = parse_dimacs(b"p cnf 2 1\n1 -2 0\n").unwrap();
        assert_eq!(f.num_variables(), 2);
        assert_eq!(f.num_clauses(), 1);
        assert_eq!(
            f.clause(0).literals(),
            &[Variable::new(1).positive(), Variable::new(2).negative()]
        );
    }

    #[test]
    fn skips_comments() {
        let f = parse_dimacs(b"c comment\np cnf 1 1\n1 0\n").unwrap();
        assert_eq!(f.num_variables(), 1);
        assert_eq!(f.clause(0).literals(), &[Variable::new(1).positive()]);
    }

    #[test]
    fn clauses_may_span_lines_and_share_lines() {
        let f = parse_dimacs(b"p cnf 3 3\n1 2\n 3 0 -1 0\n-2 -3 0\n").unwrap();
        let got: Vec<Vec<i64>> = f.clauses().iter().map(Clause::to_dimacs).collect();
        assert_eq!(got, vec![vec![1, 2, 3], vec![-1], vec![-2, -3]]);
    }

    #[test]
    fn clause_count_mismatch_keeps_actual_clauses() {
        let f = parse_dimacs(b"p cnf 2 5\n1 0\n2 0\n").unwrap();
        assert_eq!(f.num_clauses(), 2);
    }

    #[test]
    fn empty_clause_round_trips_as_bare_zero() {
        let f = parse_dimacs(b"p cnf 2 2\n1 0\n0\n").unwrap();
        assert!(f.clause(1).is_empty());
        assert_eq!(write_dimacs(&f), "p cnf 2 2\n1 0\n0\n");
    }

    #[test]
    fn percent_terminates_input() {
        let f = parse_dimacs(b"p cnf 2 1\n1 2 0\n%\n0\n").unwrap();
        assert_eq!(f.num_clauses(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            parse_dimacs(b"1 2 0\n"),
            Err(DimacsError::MissingHeader { line: 1 })
        ));
        assert!(matches!(
            parse_dimacs(b"c only\n"),
            Err(DimacsError::NoHeader)
        ));
        assert!(matches!(
            parse_dimacs(b"p cnf 2 1\n1 x 0\n"),
            Err(DimacsError::InvalidToken { line: 2, .. })
        ));
        assert!(matches!(
            parse_dimacs(b"p cnf 2 1\nc\n1 3 0\n"),
            Err(DimacsError::VariableOutOfRange {
                line: 3,
                variable: 3,
                ..
            })
        ));
        assert!(matches!(
            parse_dimacs(b"p cnf 2 1\n1 -0\n"),
            Err(DimacsError::InvalidToken { line: 2, .. })
        ));
        assert!(matches!(
            parse_dimacs(b"p sat 2 1\n"),
            Err(DimacsError::InvalidHeader { line: 1, .. })
        ));
        assert!(matches!(
            parse_dimacs(b"p cnf 2 1\np cnf 2 1\n"),
            Err(DimacsError::DuplicateHeader { line: 2 })
        ));
    }

    #[test]
    fn writes_header_and_clauses() {
        let f = CnfFormula::new(2, vec![Clause::from_dimacs(&[1, -2]).unwrap()]).unwrap();
        assert_eq!(write_dimacs(&f), "p cnf 2 1\n1 -2 0\n");
        assert_eq!(write_dimacs(&CnfFormula::empty(3)), "p cnf 3 0\n");
    }

    #[test]
    fn round_trips_generated_formulas() {
        for seed in 0..50 {
            let f = generate_random_kcnf(&RandomFormulaSpec {
                num_variables: 20,
                num_clauses: 60,
                clause_width: 3,
                seed,
            })
            .unwrap();
            let text = write_dimacs(&f);
            assert_eq!(parse_dimacs_str(&text).unwrap(), f);
        }
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        fn formula() -> impl Strategy<Value = CnfFormula> {
            (1u32..30).prop_flat_map(|n| {
                let lit =
                    (1..=n as i64, any::<bool>()).prop_map(|(v, neg)| if neg { -v } else { v });
                prop::collection::vec(prop::collection::vec(lit, 0..6), 0..40).prop_map(
                    move |clauses| {
                        let clauses = clauses
                            .iter()
                            .map(|c| Clause::from_dimacs(c).unwrap())
                            .collect();
                        CnfFormula::new(n, clauses).unwrap()
                    },
                )
            })
        }

        proptest! {
            #[test]
            fn write_then_parse_is_identity(f in formula()) {
                let text = write_dimacs(&f);
                prop_assert_eq!(parse_dimacs_str(&text).unwrap(), f);
            }
        }
    }
}
