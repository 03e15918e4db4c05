//! Per-problem selection of the candidate with the highest generation
//! probability across models.
//!
//! A candidate's score is `sum_t log p(y_t | y_<t, x)`, the log of the
//! product of its token probabilities. No length normalization is applied.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::expr::TokenSeq;

/// Allowed disagreement between a row's `total_logprob` and the sum of its
/// `token_logprobs`.
pub const LOGPROB_CONSISTENCY: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CandidateError {
    #[error("candidate token sequence is empty")]
    EmptySequence,
    #[error("token log probability at {index} is {value}, must be <= 0")]
    PositiveLogProb { index: usize, value: f64 },
    #[error("total log probability {0} must be <= 0")]
    PositiveTotal(f64),
    #[error("total_logprob {total} disagrees with sum of token_logprobs {sum}")]
    Inconsistent { total: f64, sum: f64 },
    #[error("row has neither total_logprob nor token_logprobs")]
    NoScore,
    #[error("{0}")]
    BadToken(#[from] crate::expr::BadToken),
    #[error("model id {0:?} appears twice in the priority list")]
    DuplicatePriority(String),
}

/// Sum of per-token log probabilities.
pub fn score_from_token_logprobs(logprobs: &[f64]) -> Result<f64, CandidateError> {
    if logprobs.is_empty() {
        return Err(CandidateError::EmptySequence);
    }
    if let Some((index, &value)) = logprobs.iter().enumerate().find(|(_, v)| v.is_nan() || **v > 0.0) {
        return Err(CandidateError::PositiveLogProb { index, value });
    }
    Ok(logprobs.iter().sum())
}

/// Tokens as a JSON array or a space-separated string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TokensField {
    List(Vec<String>),
    Text(String),
}

impl TokensField {
    pub fn into_seq(self) -> Result<TokenSeq, crate::expr::BadToken> {
        match self {
            TokensField::List(tokens) => TokenSeq::new(tokens),
            TokensField::Text(text) => Ok(text.parse().expect("infallible")),
        }
    }
}

/// One line of a candidate file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub id: String,
    pub model: String,
    pub tokens: TokensField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_logprob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_logprobs: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub problem_id: String,
    pub model: String,
    pub tokens: TokenSeq,
    pub log_prob: f64,
}

impl TryFrom<CandidateRow> for Candidate {
    type Error = CandidateError;

    fn try_from(row: CandidateRow) -> Result<Self, Self::Error> {
        let tokens = row.tokens.into_seq()?;
        if tokens.is_empty() {
            return Err(CandidateError::EmptySequence);
        }
        let summed = row.token_logprobs.as_deref().map(score_from_token_logprobs).transpose()?;
        let log_prob = match (row.total_logprob, summed) {
            (Some(total), Some(sum)) => {
                if (total - sum).abs() > LOGPROB_CONSISTENCY {
                    return Err(CandidateError::Inconsistent { total, sum });
                }
                total
            }
            (Some(total), None) => total,
            (None, Some(sum)) => sum,
            (None, None) => return Err(CandidateError::NoScore),
        };
        if log_prob.is_nan() || log_prob > 0.0 {
            return Err(CandidateError::PositiveTotal(log_prob));
        }
        Ok(Candidate { problem_id: row.id, model: row.model, tokens, log_prob })
    }
}

/// Tie-break order for exactly equal scores.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EnsembleConfig {
    priority: Vec<String>,
}

impl EnsembleConfig {
    pub fn new(priority: Vec<String>) -> Result<Self, CandidateError> {
        let mut seen = HashSet::new();
        if let Some(dup) = priority.iter().find(|m| !seen.insert(m.as_str())) {
            return Err(CandidateError::DuplicatePriority(dup.clone()));
        }
        Ok(EnsembleConfig { priority })
    }

    pub fn priority(&self) -> &[String] {
        &self.priority
    }

    /// Listed models rank first in list order; the rest follow by model id.
    fn rank<'a>(&self, model: &'a str) -> (usize, &'a str) {
        match self.priority.iter().position(|m| m == model) {
            Some(i) => (i, ""),
            None => (self.priority.len(), model),
        }
    }
}

/// Chosen candidates ordered by problem id, plus ids whose group was empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Selection {
    pub chosen: Vec<Candidate>,
    pub missing: Vec<String>,
}

pub fn group_by_problem(candidates: impl IntoIterator<Item = Candidate>) -> BTreeMap<String, Vec<Candidate>> {
    let mut groups: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
    for c in candidates {
        groups.entry(c.problem_id.clone()).or_default().push(c);
    }
    groups
}

/// The highest-probability candidate of one group. Sequence validity is not
/// considered here.
pub fn select_one<'a>(group: &'a [Candidate], cfg: &EnsembleConfig) -> Option<&'a Candidate> {
    let mut best: Option<&Candidate> = None;
    for c in group {
        best = match best {
            None => Some(c),
            Some(b) if c.log_prob > b.log_prob => Some(c),
            Some(b) if c.log_prob == b.log_prob && cfg.rank(&c.model) < cfg.rank(&b.model) => Some(c),
            keep => keep,
        };
    }
    best
}

pub fn select(groups: &BTreeMap<String, Vec<Candidate>>, cfg: &EnsembleConfig) -> Selection {
    let mut out = Selection::default();
    for (id, group) in groups {
        match select_one(group, cfg) {
            Some(c) => out.chosen.push(c.clone()),
            None => out.missing.push(id.clone()),
        }
    }
    out
}

/// One line of a selection file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub id: String,
    pub model: String,
    pub tokens: Vec<String>,
}

impl From<&Candidate> for SelectionRow {
    fn from(c: &Candidate) -> Self {
        SelectionRow { id: c.problem_id.clone(), model: c.model.clone(), tokens: c.tokens.tokens().to_vec() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: &str, model: &str, lp: f64) -> Candidate {
        Candidate { problem_id: id.into(), model: model.into(), tokens: "n1 n2 +".parse().unwrap(), log_prob: lp }
    }

    #[test]
    fn argmax() {
        let g = vec![cand("1", "A", -1.2), cand("1", "B", -3.4), cand("1", "C", -2.0)];
        assert_eq!(select_one(&g, &EnsembleConfig::default()).unwrap().model, "A");
    }

    #[test]
    fn tie_uses_priority() {
        let g = vec![cand("1", "A", -2.0), cand("1", "B", -2.0)];
        let cfg = EnsembleConfig::new(vec!["B".into(), "A".into()]).unwrap();
        assert_eq!(select_one(&g, &cfg).unwrap().model, "B");
        // unlisted models fall back to id order
        assert_eq!(select_one(&g, &EnsembleConfig::default()).unwrap().model, "A");
        let g = vec![cand("1", "Z", -2.0), cand("1", "C", -2.0)];
        let cfg = EnsembleConfig::new(vec!["C".into()]).unwrap();
        assert_eq!(select_one(&g, &cfg).unwrap().model, "C");
    }

    #[test]
    fn single_and_empty() {
        let g = vec![cand("1", "A", -9.0)];
        assert_eq!(select_one(&g, &EnsembleConfig::default()).unwrap().model, "A");
        let mut groups = BTreeMap::new();
        groups.insert("2".to_string(), Vec::new());
        groups.insert("1".to_string(), g);
        let sel = select(&groups, &EnsembleConfig::default());
        assert_eq!(sel.chosen.len(), 1);
        assert_eq!(sel.missing, vec!["2".to_string()]);
    }

    #[test]
    fn token_scores() {
        let lp = score_from_token_logprobs(&[0.5f64.ln(), 0.5f64.ln()]).unwrap();
        assert!((lp - 0.25f64.ln()).abs() < 1e-12);
        let lp = score_from_token_logprobs(&[0.0, 0.0, 0.1f64.ln()]).unwrap();
        assert!((lp - 0.1f64.ln()).abs() < 1e-12);
        assert_eq!(score_from_token_logprobs(&[]), Err(CandidateError::EmptySequence));
        assert!(matches!(
            score_from_token_logprobs(&[-0.1, 0.2]),
            Err(CandidateError::PositiveLogProb { index: 1, .. })
        ));
        assert!(score_from_token_logprobs(&[f64::NAN]).is_err());
    }

    #[test]
    fn row_validation() {
        let row = |total: Option<f64>, toks: Option<Vec<f64>>| CandidateRow {
            id: "1".into(),
            model: "A".into(),
            tokens: TokensField::Text("n1 n2 +".into()),
            total_logprob: total,
            token_logprobs: toks,
        };
        let c = Candidate::try_from(row(None, Some(vec![-0.5, -0.25, 0.0]))).unwrap();
        assert_eq!(c.log_prob, -0.75);
        assert!(Candidate::try_from(row(Some(-0.75), Some(vec![-0.5, -0.25, 0.0]))).is_ok());
        assert!(matches!(
            Candidate::try_from(row(Some(-0.7), Some(vec![-0.5, -0.25]))),
            Err(CandidateError::Inconsistent { .. })
        ));
        assert_eq!(Candidate::try_from(row(None, None)), Err(CandidateError::NoScore));
        assert_eq!(Candidate::try_from(row(Some(0.5), None)), Err(CandidateError::PositiveTotal(0.5)));
        let mut empty = row(Some(-1.0), None);
        empty.tokens = TokensField::List(vec![]);
        assert_eq!(Candidate::try_from(empty), Err(CandidateError::EmptySequence));
    }

    #[test]
    fn duplicate_priority_rejected() {
        assert!(EnsembleConfig::new(vec!["A".into(), "A".into()]).is_err());
    }
}
