//! Math23K ingestion, preprocessing, splitting and scoring, plus the
//! line-delimited interchange formats.

mod load;
mod preprocess;
mod score;
mod split;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use load::{load_math23k, load_math23k_str, LoadIssue, LoadReport, RawRecord};
pub use preprocess::{
    preprocess, process_record, summarize_processed, CorpusStats, FailureKind, MappingEntry, PreprocessOptions,
    PreprocessOutput, ProcessedRecord, ProcessedSummary, RecordFailure, RunConfig, TemplateStats,
};
pub use score::{score_predictions, PredictionRow, ScoreReport, Verdict, VerdictRow};
pub use split::{split, Split};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("validation size {requested} must be smaller than the {available} training records")]
    SplitTooLarge { requested: usize, available: usize },
}

impl DatasetError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io { path: path.to_owned(), source }
    }
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| DatasetError::Malformed { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let value =
            serde_json::from_str(&line).map_err(|e| DatasetError::Malformed { line: i + 1, message: e.to_string() })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_jsonl_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = std::fs::File::open(path).map_err(|e| DatasetError::io(path, e))?;
    read_jsonl(std::io::BufReader::new(file))
}

/// Writes one compact JSON object per line.
pub fn write_jsonl<T: Serialize>(mut writer: impl Write, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn to_jsonl_string<T: Serialize>(items: &[T]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, items).expect("writing to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}
