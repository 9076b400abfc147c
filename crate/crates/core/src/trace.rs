//! CSV traces of sampled generations.
//!
//! Columns, in order: `generation,score,decisions,propagations,clauses,
//! accepted,status,event`. `accepted` is `true`/`false`, `status` is one of
//! `SAT`, `UNSAT`, `LIMIT_EXCEEDED` and `event` is `NORMAL` or `BREAK`.

use std::io::{Read, Write};

use thiserror::Error;

use crate::cnf::CnfFormula;
use crate::evolve::{GenerationRecord, TraceSink};

pub const TRACE_HEADER: &str =
    "generation,score,decisions,propagations,clauses,accepted,status,event";

/// Rows written between flushes of the underlying writer.
pub const DEFAULT_FLUSH_EVERY: u64 = 1000;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace header is {found:?}, expected {TRACE_HEADER:?}")]
    Header { found: String },
    #[error("trace row {row}: {source}")]
    Row { row: u64, source: csv::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Writes each record as one CSV row.
pub struct CsvTraceSink<W: Write> {
    writer: csv::Writer<W>,
    flush_every: u64,
    rows: u64,
}

impl<W: Write> CsvTraceSink<W> {
    /// Writes the header immediately so even an empty trace is well-formed.
    pub fn new(inner: W) -> std::io::Result<Self> {
        Self::with_flush_every(inner, DEFAULT_FLUSH_EVERY)
    }

    pub fn with_flush_every(inner: W, flush_every: u64) -> std::io::Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(inner);
        writer.write_record(TRACE_HEADER.split(','))?;
        writer.flush()?;
        Ok(CsvTraceSink {
            writer,
            flush_every: flush_every.max(1),
            rows: 0,
        })
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn into_inner(self) -> std::io::Result<W> {
        self.writer.into_inner().map_err(|e| e.into_error())
    }
}

impl<W: Write> TraceSink for CsvTraceSink<W> {
    fn record(&mut self, record: &GenerationRecord, _: &CnfFormula) -> std::io::Result<()> {
        self.writer.serialize(record)?;
        self.rows += 1;
        if self.rows.is_multiple_of(self.flush_every) {
            self.writer.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.writer.flush()
    }
}

/// Parses a whole trace, checking the header.
pub fn read_trace<R: Read>(input: R) -> Result<Vec<GenerationRecord>, TraceError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(input);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != TRACE_HEADER {
        return Err(TraceError::Header { found: header });
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|source| TraceError::Row {
                row: i as u64 + 1,
                source,
            })
        })
        .collect()
}

/// Parses one data row (no header).
pub fn parse_trace_row(line: &str) -> Result<GenerationRecord, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(line.as_bytes());
    let headers = csv::StringRecord::from(TRACE_HEADER.split(',').collect::<Vec<_>>());
    match reader.records().next() {
        Some(row) => Ok(row?.deserialize(Some(&headers))?),
        None => Err(TraceError::Row {
            row: 1,
            source: csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "empty row",
            )),
        }),
    }
}
