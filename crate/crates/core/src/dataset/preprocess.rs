use std::collections::{BTreeMap, HashSet};

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RawRecord;
use crate::eval::{self, check_answer, evaluate, ExactValue};
use crate::expr::{Expr, Operand};
use crate::infix::{parse_infix, to_infix};
use crate::mapping::{build_template, extract_numbers, NumberMapping};
use crate::normalize::{normalize, NormalizeConfig};
use crate::numeric;
use crate::oracle::{self, oracle_report};
use crate::postorder::{parse_postorder_str, to_postorder};

/// Knobs recorded alongside the stats for reproducibility.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub se: bool,
    pub oe: bool,
    pub eb: bool,
    pub seed: u64,
    pub tolerance: f64,
    pub trials: usize,
    pub drop_uncovered: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreprocessOptions {
    pub normalize: NormalizeConfig,
    pub seed: u64,
    pub tolerance: f64,
    /// Oracle trials comparing raw and normalized templates; 0 disables.
    pub trials: usize,
    pub drop_uncovered: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            normalize: NormalizeConfig::ALL,
            seed: 42,
            tolerance: eval::DEFAULT_TOLERANCE,
            trials: oracle::DEFAULT_TRIALS,
            drop_uncovered: false,
        }
    }
}

impl PreprocessOptions {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            se: self.normalize.enable_se,
            oe: self.normalize.enable_oe,
            eb: self.normalize.enable_eb,
            seed: self.seed,
            tolerance: self.tolerance,
            trials: self.trials,
            drop_uncovered: self.drop_uncovered,
        }
    }
}

/// `{token, value, position}` with `value` as a `p/q` string.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub token: String,
    pub value: String,
    pub position: usize,
}

/// One line of a processed-records file.
///
/// `infix` is the template as written in the gold equation; `postorder` is
/// the normalized target sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub mapping: Vec<MappingEntry>,
    pub infix: String,
    pub postorder: String,
    pub ans: String,
    pub coverage: bool,
}

impl ProcessedRecord {
    /// Mapping values in token order.
    pub fn values(&self) -> Option<Vec<BigRational>> {
        self.mapping.iter().map(|m| numeric::parse_rational(&m.value)).collect()
    }

    pub fn gold(&self) -> Option<ExactValue> {
        numeric::parse_rational(&self.ans).map(ExactValue::Exact)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    EquationParse,
    AnswerParse,
    NoNumbers,
    Uncovered,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordFailure {
    pub id: String,
    pub kind: FailureKind,
    pub message: String,
}

/// Dedup counts over a template corpus.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TemplateStats {
    pub distinct_raw: usize,
    pub distinct_normalized: usize,
    /// Distinct templates with only that pass enabled.
    pub distinct_se_only: usize,
    pub distinct_oe_only: usize,
    pub distinct_eb_only: usize,
    pub distinct_all_passes: usize,
    /// `distinct_raw - distinct_<pass>_only`.
    pub delta_se: usize,
    pub delta_oe: usize,
    pub delta_eb: usize,
    /// Normalized postorder length -> record count.
    pub length_histogram: BTreeMap<usize, usize>,
    /// Records whose template keeps at least one constant leaf.
    pub with_constants: usize,
}

impl TemplateStats {
    /// `normalized` holds the configured output per template.
    pub fn compute(raw: &[Expr], normalized: &[String]) -> TemplateStats {
        let distinct = |cfg: NormalizeConfig| {
            raw.par_iter().map(|t| to_postorder(&normalize(t, cfg)).to_string()).collect::<HashSet<_>>().len()
        };
        let distinct_raw = raw.iter().map(|t| to_postorder(t).to_string()).collect::<HashSet<_>>().len();
        let se = distinct(NormalizeConfig::SE_ONLY);
        let oe = distinct(NormalizeConfig::OE_ONLY);
        let eb = distinct(NormalizeConfig::EB_ONLY);
        let mut length_histogram = BTreeMap::new();
        for p in normalized {
            *length_histogram.entry(p.split_whitespace().count()).or_insert(0) += 1;
        }
        TemplateStats {
            distinct_raw,
            distinct_normalized: normalized.iter().collect::<HashSet<_>>().len(),
            distinct_se_only: se,
            distinct_oe_only: oe,
            distinct_eb_only: eb,
            distinct_all_passes: distinct(NormalizeConfig::ALL),
            delta_se: distinct_raw - se,
            delta_oe: distinct_raw - oe,
            delta_eb: distinct_raw - eb,
            length_histogram,
            with_constants: raw.iter().filter(|t| t.leaves().iter().any(|l| matches!(l, Operand::Constant(_)))).count(),
        }
    }
}

/// Corpus-level summary written next to the processed records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub config: RunConfig,
    pub records_in: usize,
    pub processed: usize,
    pub covered: usize,
    pub coverage_rate: f64,
    pub failures: BTreeMap<FailureKind, usize>,
    /// Templates whose value under the mapping misses the gold answer.
    pub answer_mismatches: usize,
    /// Templates the oracle found not equivalent to their normalized form.
    pub oracle_mismatches: usize,
    pub oracle_undecided: usize,
    pub templates: TemplateStats,
}

pub struct PreprocessOutput {
    pub records: Vec<ProcessedRecord>,
    pub failures: Vec<RecordFailure>,
    pub stats: CorpusStats,
}

struct Processed {
    record: ProcessedRecord,
    raw: Expr,
    answer_ok: bool,
    oracle: Option<bool>,
}

fn record_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs number mapping, templating and normalization on one record.
/// `index` only feeds the oracle seed.
fn process(raw: &RawRecord, index: usize, opts: &PreprocessOptions) -> Result<Processed, RecordFailure> {
    let fail = |kind, message: String| RecordFailure { id: raw.id.clone(), kind, message };
    let tokens: Vec<String> = raw.segmented_text.split_whitespace().map(str::to_owned).collect();
    let numbers = extract_numbers(&tokens);
    let built = build_template(&raw.equation, &numbers).map_err(|e| fail(FailureKind::EquationParse, e.to_string()))?;
    let gold = eval::parse_answer(&raw.ans).map_err(|e| fail(FailureKind::AnswerParse, e.to_string()))?;
    if built.mapping.is_empty() {
        return Err(fail(FailureKind::NoNumbers, "no number token maps to the problem text".into()));
    }
    if !built.coverage && opts.drop_uncovered {
        return Err(fail(FailureKind::Uncovered, "equation literal without a text match".into()));
    }
    let normalized = normalize(&built.template, opts.normalize);
    let answer_ok =
        evaluate(&built.template, &built.mapping).map(|v| check_answer(&v, &gold, opts.tolerance)).unwrap_or(false);
    let oracle = (opts.trials > 0)
        .then(|| oracle_report(&built.template, &normalized, opts.trials, record_seed(opts.seed, index)).ok())
        .flatten()
        .map(|r| r.equivalent());
    let gold_text = match &gold {
        ExactValue::Exact(v) => numeric::format_rational(v),
        ExactValue::Approx(v) => v.to_string(),
    };
    Ok(Processed {
        record: ProcessedRecord {
            id: raw.id.clone(),
            tokens,
            mapping: mapping_entries(&built.mapping),
            infix: to_infix(&built.template),
            postorder: to_postorder(&normalized).to_string(),
            ans: gold_text,
            coverage: built.coverage,
        },
        raw: built.template,
        answer_ok,
        oracle,
    })
}

fn mapping_entries(mapping: &NumberMapping) -> Vec<MappingEntry> {
    mapping
        .entries()
        .iter()
        .map(|e| MappingEntry {
            token: e.token.to_string(),
            value: numeric::format_rational(&e.number.value),
            position: e.number.position,
        })
        .collect()
}

/// Processes a single record outside a corpus run.
pub fn process_record(raw: &RawRecord, opts: &PreprocessOptions) -> Result<ProcessedRecord, RecordFailure> {
    process(raw, 0, opts).map(|p| p.record)
}

/// Per-record work runs on the current rayon pool; output order equals
/// input order regardless of worker count.
pub fn preprocess(records: &[RawRecord], opts: &PreprocessOptions) -> PreprocessOutput {
    let results: Vec<Result<Processed, RecordFailure>> =
        records.par_iter().enumerate().map(|(i, r)| process(r, i, opts)).collect();

    let mut processed = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(p) => processed.push(p),
            Err(f) => failures.push(f),
        }
    }
    let mut failure_counts = BTreeMap::new();
    for f in &failures {
        *failure_counts.entry(f.kind).or_insert(0) += 1;
    }
    let raw: Vec<Expr> = processed.iter().map(|p| p.raw.clone()).collect();
    let normalized: Vec<String> = processed.iter().map(|p| p.record.postorder.clone()).collect();
    let covered = processed.iter().filter(|p| p.record.coverage).count();
    let stats = CorpusStats {
        config: opts.run_config(),
        records_in: records.len(),
        processed: processed.len(),
        covered,
        coverage_rate: if processed.is_empty() { 0.0 } else { covered as f64 / processed.len() as f64 },
        failures: failure_counts,
        answer_mismatches: processed.iter().filter(|p| !p.answer_ok).count(),
        oracle_mismatches: processed.iter().filter(|p| p.oracle == Some(false)).count(),
        oracle_undecided: if opts.trials == 0 { 0 } else { processed.iter().filter(|p| p.oracle.is_none()).count() },
        templates: TemplateStats::compute(&raw, &normalized),
    };
    PreprocessOutput { records: processed.into_iter().map(|p| p.record).collect(), failures, stats }
}

impl ProcessedRecord {
    /// Raw template recovered from the `infix` field.
    pub fn raw_template(&self) -> Option<Expr> {
        parse_infix(&self.infix).ok()
    }

    /// Normalized template recovered from the `postorder` field.
    pub fn normalized_template(&self) -> Option<Expr> {
        parse_postorder_str(&self.postorder).ok()
    }
}

/// Summary recomputed from a processed-records file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessedSummary {
    pub records: usize,
    pub covered: usize,
    pub coverage_rate: f64,
    /// Records whose `infix` or `postorder` field does not parse.
    pub unreadable: usize,
    pub templates: TemplateStats,
}

pub fn summarize_processed(records: &[ProcessedRecord]) -> ProcessedSummary {
    let mut raw = Vec::with_capacity(records.len());
    let mut normalized = Vec::with_capacity(records.len());
    let mut unreadable = 0;
    for r in records {
        match (r.raw_template(), r.normalized_template()) {
            (Some(t), Some(n)) => {
                raw.push(t);
                normalized.push(to_postorder(&n).to_string());
            }
            _ => unreadable += 1,
        }
    }
    let covered = records.iter().filter(|r| r.coverage).count();
    ProcessedSummary {
        records: records.len(),
        covered,
        coverage_rate: if records.is_empty() { 0.0 } else { covered as f64 / records.len() as f64 },
        unreadable,
        templates: TemplateStats::compute(&raw, &normalized),
    }
}
