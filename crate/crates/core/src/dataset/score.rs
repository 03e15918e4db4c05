use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ProcessedRecord;
use crate::ensemble::TokensField;
use crate::eval::{check_answer, solve_postorder, SolveError};

/// One line of a prediction file: `{id, postorder}`. Selection rows
/// (`{id, model, tokens}`) are accepted as well.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub postorder: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<TokensField>,
}

impl PredictionRow {
    pub fn token_list(&self) -> Vec<String> {
        match (&self.postorder, &self.tokens) {
            (Some(p), _) => p.split_whitespace().map(str::to_owned).collect(),
            (None, Some(TokensField::List(t))) => t.clone(),
            (None, Some(TokensField::Text(t))) => t.split_whitespace().map(str::to_owned).collect(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    WrongValue,
    Invalid,
    EvalError,
    Missing,
}

/// Per-record line of a score report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub id: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub wrong_value: usize,
    pub invalid: usize,
    pub eval_error: usize,
    pub missing: usize,
    /// Prediction ids with no gold record.
    pub unknown_ids: usize,
    pub tolerance: f64,
    #[serde(skip)]
    pub verdicts: Vec<VerdictRow>,
}

fn judge(record: &ProcessedRecord, tokens: &[String], tolerance: f64) -> VerdictRow {
    let row = |verdict, value: Option<String>, detail: Option<String>| VerdictRow {
        id: record.id.clone(),
        verdict,
        value,
        detail,
    };
    let (Some(values), Some(gold)) = (record.values(), record.gold()) else {
        return row(Verdict::EvalError, None, Some("gold record has unreadable values".into()));
    };
    match solve_postorder(tokens, &values) {
        Ok(v) if check_answer(&v, &gold, tolerance) => row(Verdict::Correct, Some(v.to_string()), None),
        Ok(v) => row(Verdict::WrongValue, Some(v.to_string()), None),
        Err(SolveError::Invalid(e)) => row(Verdict::Invalid, None, Some(e.reason.kind().to_owned())),
        Err(SolveError::Eval(e)) => row(Verdict::EvalError, None, Some(e.to_string())),
    }
}

/// Scores predictions against gold records by solution value. The first
/// prediction for an id wins; invalid sequences count as wrong.
pub fn score_predictions(processed: &[ProcessedRecord], predictions: &[PredictionRow], tolerance: f64) -> ScoreReport {
    let mut by_id: HashMap<&str, &PredictionRow> = HashMap::new();
    for p in predictions {
        by_id.entry(p.id.as_str()).or_insert(p);
    }
    let gold_ids: std::collections::HashSet<&str> = processed.iter().map(|r| r.id.as_str()).collect();
    let unknown_ids = by_id.keys().filter(|id| !gold_ids.contains(*id)).count();

    let verdicts: Vec<VerdictRow> = processed
        .iter()
        .map(|record| match by_id.get(record.id.as_str()) {
            Some(p) => judge(record, &p.token_list(), tolerance),
            None => VerdictRow { id: record.id.clone(), verdict: Verdict::Missing, value: None, detail: None },
        })
        .collect();
    let count = |v: Verdict| verdicts.iter().filter(|r| r.verdict == v).count();
    let correct = count(Verdict::Correct);
    ScoreReport {
        total: processed.len(),
        correct,
        accuracy: if processed.is_empty() { 0.0 } else { correct as f64 / processed.len() as f64 },
        wrong_value: count(Verdict::WrongValue),
        invalid: count(Verdict::Invalid),
        eval_error: count(Verdict::EvalError),
        missing: count(Verdict::Missing),
        unknown_ids,
        tolerance,
        verdicts,
    }
}
