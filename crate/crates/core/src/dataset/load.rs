use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::DatasetError;

/// One problem as released: `{id, original_text, segmented_text, equation, ans}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    #[serde(default)]
    pub original_text: String,
    pub segmented_text: String,
    pub equation: String,
    pub ans: String,
}

/// A record that could not be read, with its 1-based starting line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadIssue {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub records: Vec<RawRecord>,
    pub issues: Vec<LoadIssue>,
}

pub fn load_math23k(path: &Path, lenient: bool) -> Result<LoadReport, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    load_math23k_str(&text, lenient)
}

fn string_field(obj: &serde_json::Map<String, Value>, key: &str, required: bool) -> Result<String, String> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        Some(Value::Null) | None if !required => Ok(String::new()),
        Some(other) => Err(format!("field {key:?} has unsupported type: {other}")),
        None => Err(format!("missing field {key:?}")),
    }
}

fn to_record(value: Value) -> Result<RawRecord, String> {
    let Value::Object(obj) = value else {
        return Err("record is not a JSON object".to_owned());
    };
    let record = RawRecord {
        id: string_field(&obj, "id", true)?,
        original_text: string_field(&obj, "original_text", false)?,
        segmented_text: string_field(&obj, "segmented_text", true)?,
        equation: string_field(&obj, "equation", true)?,
        ans: string_field(&obj, "ans", true)?,
    };
    if record.equation.trim().is_empty() {
        return Err("empty equation".to_owned());
    }
    Ok(record)
}

/// Incremental 1-based line lookup for increasing offsets.
#[derive(Default)]
struct LineCounter {
    offset: usize,
    newlines: usize,
}

impl LineCounter {
    fn line_at(&mut self, text: &str, offset: usize) -> usize {
        self.newlines += text.as_bytes()[self.offset..offset].iter().filter(|&&b| b == b'\n').count();
        self.offset = offset;
        self.newlines + 1
    }
}

fn skip_separators(text: &str, mut offset: usize) -> usize {
    let bytes = text.as_bytes();
    while offset < bytes.len() && (bytes[offset].is_ascii_whitespace() || bytes[offset] == b',') {
        offset += 1;
    }
    offset
}

/// Start of the next line that opens an object, after `offset`.
fn resync(text: &str, offset: usize) -> Option<usize> {
    let mut search = offset;
    while let Some(nl) = text[search..].find('\n') {
        let line_start = search + nl + 1;
        let trimmed = skip_separators(text, line_start);
        if text[trimmed..].starts_with('{') {
            return Some(trimmed);
        }
        search = line_start;
    }
    None
}

/// Parses a top-level JSON array of records, or records concatenated one
/// after another (the released format). With `lenient`, malformed records
/// are reported and skipped; otherwise the first one is fatal.
pub fn load_math23k_str(text: &str, lenient: bool) -> Result<LoadReport, DatasetError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = LineCounter::default();
    let mut offset = skip_separators(text, 0);
    if offset >= text.len() {
        return Err(DatasetError::Empty);
    }
    let in_array = text[offset..].starts_with('[');
    if in_array {
        offset += 1;
    }
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    loop {
        offset = skip_separators(text, offset);
        if offset >= text.len() || (in_array && text[offset..].starts_with(']')) {
            break;
        }
        let start_line = lines.line_at(text, offset);
        let mut stream = serde_json::Deserializer::from_str(&text[offset..]).into_iter::<Value>();
        let issue = match stream.next() {
            None => break,
            Some(Ok(value)) => {
                offset += stream.byte_offset();
                match to_record(value) {
                    Ok(rec) if !seen.insert(rec.id.clone()) => Some(format!("duplicate id {:?}", rec.id)),
                    Ok(rec) => {
                        report.records.push(rec);
                        None
                    }
                    Err(message) => Some(message),
                }
            }
            Some(Err(e)) => {
                let message = format!("{e}");
                match resync(text, offset) {
                    Some(next) => offset = next,
                    None => offset = text.len(),
                }
                Some(message)
            }
        };
        if let Some(message) = issue {
            if !lenient {
                return Err(DatasetError::Malformed { line: start_line, message });
            }
            report.issues.push(LoadIssue { line: start_line, message });
        }
    }
    if report.records.is_empty() && report.issues.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(report)
}
