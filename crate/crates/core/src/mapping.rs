//! Number extraction from problem text and equation templating.

use num_rational::BigRational;

use crate::eval::Bindings;
use crate::expr::{Expr, NumberToken, Operand};
use crate::infix::{self, LexKind, ParseError, ParseOptions};
use crate::numeric;

/// A number found in the problem text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedNumber {
    /// 0-based index of the text token it came from.
    pub position: usize,
    pub value: BigRational,
    pub surface: String,
}

/// Scans pre-segmented text left to right; at most one number per token.
pub fn extract_numbers<S: AsRef<str>>(text_tokens: &[S]) -> Vec<ExtractedNumber> {
    text_tokens
        .iter()
        .enumerate()
        .filter_map(|(position, token)| {
            numeric::find_literal(token.as_ref()).map(|(value, surface)| ExtractedNumber {
                position,
                value,
                surface: surface.to_owned(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappedNumber {
    pub token: NumberToken,
    pub number: ExtractedNumber,
}

/// Ordered `n1..nm` assignment in text order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NumberMapping {
    entries: Vec<MappedNumber>,
    values: Vec<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MappingError {
    #[error("mapping tokens must be n1..nm in order; entry {0} breaks contiguity")]
    NotContiguous(usize),
    #[error("mapping text positions must increase; entry {0} is out of order")]
    OutOfOrder(usize),
}

impl NumberMapping {
    /// Assigns `n1..nm` to `numbers` in the given order.
    pub fn from_numbers(numbers: Vec<ExtractedNumber>) -> Result<Self, MappingError> {
        for (i, pair) in numbers.windows(2).enumerate() {
            if pair[1].position <= pair[0].position {
                return Err(MappingError::OutOfOrder(i + 1));
            }
        }
        let entries: Vec<MappedNumber> = numbers
            .into_iter()
            .enumerate()
            .map(|(i, number)| MappedNumber { token: NumberToken::new(i as u32 + 1).expect("1-based"), number })
            .collect();
        let values = entries.iter().map(|e| e.number.value.clone()).collect();
        Ok(NumberMapping { entries, values })
    }

    /// Rebuilds from explicit entries, checking contiguity and text order.
    pub fn from_entries(entries: Vec<MappedNumber>) -> Result<Self, MappingError> {
        if let Some(i) = entries.iter().enumerate().position(|(i, e)| e.token.index() as usize != i + 1) {
            return Err(MappingError::NotContiguous(i));
        }
        Self::from_numbers(entries.into_iter().map(|e| e.number).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[MappedNumber] {
        &self.entries
    }

    pub fn values(&self) -> &[BigRational] {
        &self.values
    }

    pub fn get(&self, token: NumberToken) -> Option<&MappedNumber> {
        self.entries.get(token.index() as usize - 1)
    }
}

impl Bindings for NumberMapping {
    fn value_of(&self, index: u32) -> Option<&BigRational> {
        self.values.value_of(index)
    }
}

/// Keeps numbers whose flag is set, re-indexed `1..m` in text order.
/// Training data passes equation-matched flags; inference passes all-true.
pub fn significant_filter(numbers: &[ExtractedNumber], flags: &[bool]) -> NumberMapping {
    let kept = numbers.iter().zip(flags).filter(|(_, &keep)| keep).map(|(n, _)| n.clone()).collect();
    NumberMapping::from_numbers(kept).expect("extraction yields increasing positions")
}

/// Inference-time mapping: every extracted number is kept.
pub fn inference_mapping(numbers: &[ExtractedNumber]) -> NumberMapping {
    significant_filter(numbers, &vec![true; numbers.len()])
}

/// Template built from a gold equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateRecord {
    pub mapping: NumberMapping,
    pub template: Expr,
    /// One flag per extracted number: used by the equation.
    pub significant: Vec<bool>,
    /// Every equation literal matched a text number.
    pub coverage: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("equation already contains number token {token} at position {position}")]
    TokenInEquation { position: usize, token: NumberToken },
}

/// Replaces equation literals by number tokens.
///
/// Each literal takes the earliest not-yet-consumed text number with the same
/// exact value. A literal whose equal-valued text numbers are all consumed
/// reuses the earliest of them (`5*5` with one `5` in the text becomes
/// `n1*n1`). Literals with no equal text number stay constants and clear the
/// coverage flag. Tokens are finally re-packed to `1..m` over the used
/// numbers in text order.
pub fn build_template(equation: &str, numbers: &[ExtractedNumber]) -> Result<TemplateRecord, TemplateError> {
    let lexemes = infix::lex(equation, ParseOptions { fraction_literals: true })?;
    let body = infix::strip_unknown(&lexemes)?;
    let mut consumed = vec![false; numbers.len()];
    let mut coverage = true;
    let mut templated = Vec::with_capacity(body.len());
    for lexeme in body {
        let mut lexeme = lexeme.clone();
        match &lexeme.kind {
            LexKind::Literal(value) => {
                let fresh = (0..numbers.len()).find(|&i| !consumed[i] && numbers[i].value == *value);
                let matched = fresh.or_else(|| (0..numbers.len()).find(|&i| numbers[i].value == *value));
                match matched {
                    Some(i) => {
                        consumed[i] = true;
                        lexeme.kind = LexKind::Number(NumberToken::new(i as u32 + 1).expect("1-based"));
                    }
                    None => coverage = false,
                }
            }
            LexKind::Number(token) => {
                return Err(TemplateError::TokenInEquation { position: lexeme.position, token: *token })
            }
            _ => {}
        }
        templated.push(lexeme);
    }
    let provisional = infix::parse_lexemes(&templated, equation.chars().count())?;

    let mut rank = vec![0u32; numbers.len()];
    let mut next = 0;
    for (i, used) in consumed.iter().enumerate() {
        if *used {
            next += 1;
            rank[i] = next;
        }
    }
    let template = provisional.map_leaves(&mut |leaf| match leaf {
        Operand::Number(t) => Expr::number(rank[t.index() as usize - 1]),
        Operand::Constant(_) => Expr::Leaf(leaf.clone()),
    });
    Ok(TemplateRecord { mapping: significant_filter(numbers, &consumed), template, significant: consumed, coverage })
}
