//! Numeric literal lexicon shared by problem-text extraction, equation
//! parsing and answer parsing.
//!
//! Recognized shapes: integers and decimals (`12`, `3.5`), percents
//! (`50%`), fractions (`3/5`, `(3/5)`) and mixed numbers (`1(1/2)`).

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use regex::Regex;

const DECIMAL: &str = r"\d+(?:\.\d+)?";

fn literal_finder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // alternation order matters: longest shapes first
        let pattern = format!(r"\d+\(\d+/\d+\)|\({d}/{d}\)|{d}/{d}|{d}%|{d}", d = DECIMAL);
        Regex::new(&pattern).expect("literal pattern compiles")
    })
}

/// Parses an unsigned decimal such as `12` or `3.25` exactly.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if text.contains('.') && (frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Some(BigRational::new(numer, denom))
}

fn parse_fraction(text: &str) -> Option<BigRational> {
    let (num, den) = text.split_once('/')?;
    let num = parse_decimal(num)?;
    let den = parse_decimal(den)?;
    if den.is_zero() {
        return None;
    }
    Some(num / den)
}

/// Parses a complete unsigned literal in any recognized shape.
pub fn parse_unsigned_literal(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some(pct) = text.strip_suffix('%') {
        return parse_decimal(pct).map(|v| v / BigRational::from_integer(BigInt::from(100)));
    }
    if let Some(inner) = text.strip_prefix('(').and_then(|t| t.strip_suffix(')')) {
        if inner.contains('/') {
            return parse_fraction(inner);
        }
        return None;
    }
    if let Some(open) = text.find('(') {
        // mixed number: whole(num/den)
        let whole = parse_decimal(&text[..open])?;
        if !whole.is_integer() {
            return None;
        }
        let rest = text[open..].strip_prefix('(')?.strip_suffix(')')?;
        let frac = parse_fraction(rest)?;
        return Some(whole + frac);
    }
    if text.contains('/') {
        return parse_fraction(text);
    }
    parse_decimal(text)
}

/// Parses a complete literal with an optional leading sign.
pub fn parse_literal(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix('-') {
        parse_unsigned_literal(rest).map(|v| -v)
    } else if let Some(rest) = text.strip_prefix('+') {
        parse_unsigned_literal(rest)
    } else {
        parse_unsigned_literal(text)
    }
}

/// Finds the first numeric literal inside `token`, returning its value and
/// surface form.
pub fn find_literal(token: &str) -> Option<(BigRational, &str)> {
    literal_finder().find_iter(token).find_map(|m| parse_unsigned_literal(m.as_str()).map(|v| (v, m.as_str())))
}

/// True when `value` has a finite decimal expansion.
pub fn is_terminating(value: &BigRational) -> bool {
    let mut d = value.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while d.is_even() {
        d /= &two;
    }
    while (&d % &five).is_zero() {
        d /= &five;
    }
    d.is_one()
}

/// Renders a terminating rational as a decimal literal (`0.25`, `-3`).
/// Non-terminating values render as `p/q`.
pub fn format_decimal(value: &BigRational) -> String {
    if value.is_integer() {
        return value.numer().to_string();
    }
    if !is_terminating(value) {
        return format!("{}/{}", value.numer(), value.denom());
    }
    let ten = BigInt::from(10);
    let mut scale = 0usize;
    let mut scaled = value.abs();
    while !scaled.is_integer() {
        scaled *= BigRational::from_integer(ten.clone());
        scale += 1;
    }
    let digits = scaled.to_integer().to_string();
    let digits = format!("{digits:0>width$}", width = scale + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - scale);
    let sign = if value.is_negative() { "-" } else { "" };
    format!("{sign}{int_part}.{frac_part}")
}

/// Canonical `p/q` interchange rendering; integers render without `/1`.
pub fn format_rational(value: &BigRational) -> String {
    value.to_string()
}

/// Parses the interchange rendering produced by [`format_rational`].
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().ok()?;
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => text.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}
