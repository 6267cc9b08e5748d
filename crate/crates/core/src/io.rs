//! `summary.json` and `transcript.jsonl`.
//!
//! The transcript holds one [`RoundRecord`] JSON object per line, ordered by
//! `round_id`. The summary wraps [`SummaryStats`] with the effective
//! configuration and the tool version so every number is reproducible from
//! the file alone.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OutputError, ReplayError};
use crate::harness::{ExperimentConfig, SummaryStats};
use crate::protocol::RoundRecord;

pub const SUMMARY_SCHEMA: &str = "qdialog.summary/1";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryDocument {
    pub schema: String,
    pub tool_version: String,
    /// Absent for summaries rebuilt from a transcript without a config.
    pub config: Option<ExperimentConfig>,
    pub stats: SummaryStats,
}

impl SummaryDocument {
    pub fn new(config: Option<ExperimentConfig>, stats: SummaryStats) -> Self {
        Self {
            schema: SUMMARY_SCHEMA.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            config,
            stats,
        }
    }
}

fn out_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError { path: path.to_path_buf(), source }
}

pub fn transcript_to_string(records: &[RoundRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_transcript(path: &Path, records: &[RoundRecord]) -> Result<(), OutputError> {
    let file = File::create(path).map_err(out_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| out_err(path)(e.into()))?;
        w.write_all(b"\n").map_err(out_err(path))?;
    }
    w.flush().map_err(out_err(path))
}

/// Parses JSON lines; errors report the 1-based line number.
pub fn parse_transcript(reader: impl BufRead) -> Result<Vec<RoundRecord>, ReplayError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| ReplayError::Schema { line: line_no, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| ReplayError::Schema { line: line_no, message: e.to_string() })?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_transcript(path: &Path) -> Result<Vec<RoundRecord>, ReplayError> {
    let file =
        File::open(path).map_err(|source| ReplayError::Read { path: path.to_path_buf(), source })?;
    parse_transcript(BufReader::new(file))
}

pub fn summary_to_string(doc: &SummaryDocument) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("summary serializes");
    text.push('\n');
    text
}

pub fn write_summary(path: &Path, doc: &SummaryDocument) -> Result<(), OutputError> {
    fs::write(path, summary_to_string(doc)).map_err(out_err(path))
}

pub fn read_summary(path: &Path) -> Result<SummaryDocument, ReplayError> {
    let text = fs::read_to_string(path)
        .map_err(|source| ReplayError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text)
        .map_err(|e| ReplayError::Summary { path: path.to_path_buf(), message: e.to_string() })
}
