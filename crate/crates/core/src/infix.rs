//! Infix equation parsing and minimal-parenthesis rendering.
//!
//! Precedence is `^` over `*` `/` over `+` `-`. The four arithmetic
//! operators associate left, `^` associates right. Unary minus becomes
//! `0 - x` so the tree stays strictly binary.

use std::fmt::{self, Write as _};
use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use regex::Regex;

use crate::expr::{Expr, NumberToken, Op, Operand};
use crate::numeric;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected {found} at position {position}")]
    UnexpectedToken { position: usize, found: String },
    #[error("unexpected end of input at position {position}")]
    UnexpectedEnd { position: usize },
    #[error("unbalanced parenthesis at position {position}")]
    UnbalancedParen { position: usize },
    #[error("unknown symbol {symbol:?} at position {position}")]
    UnknownSymbol { position: usize, symbol: String },
    #[error("malformed numeric literal {text:?} at position {position}")]
    BadLiteral { position: usize, text: String },
    /// The unknown must appear alone on the left of a single `=`.
    #[error("unknown x is only accepted as the sole left-hand side (`x = ...`), found at position {position}")]
    MisplacedUnknown { position: usize },
    #[error("left-hand side of `=` must be the unknown x")]
    BadLeftHandSide,
}

impl ParseError {
    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::UnexpectedToken { position, .. }
            | ParseError::UnexpectedEnd { position }
            | ParseError::UnbalancedParen { position }
            | ParseError::UnknownSymbol { position, .. }
            | ParseError::BadLiteral { position, .. }
            | ParseError::MisplacedUnknown { position } => Some(*position),
            ParseError::Empty | ParseError::BadLeftHandSide => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Lex `(a/b)` with literal `a` and `b` as a single fraction constant,
    /// matching how problem text writes fractions.
    pub fraction_literals: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LexKind {
    Number(NumberToken),
    Literal(BigRational),
    Op(Op),
    LParen,
    RParen,
    Equals,
    Unknown,
}

/// A lexed token with its character offset in the source.
#[derive(Clone, Debug, PartialEq)]
pub struct Lexeme {
    pub kind: LexKind,
    pub position: usize,
}

impl fmt::Display for LexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexKind::Number(t) => write!(f, "token {t}"),
            LexKind::Literal(v) => write!(f, "literal {}", numeric::format_decimal(v)),
            LexKind::Op(op) => write!(f, "operator '{op}'"),
            LexKind::LParen => f.write_str("'('"),
            LexKind::RParen => f.write_str("')'"),
            LexKind::Equals => f.write_str("'='"),
            LexKind::Unknown => f.write_str("unknown x"),
        }
    }
}

fn fraction_prefix() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[(（]\d+(?:\.\d+)?/\d+(?:\.\d+)?[)）]").expect("fraction pattern compiles"))
}

pub fn lex(text: &str, opts: ParseOptions) -> Result<Vec<Lexeme>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (byte, c) = chars[i];
        let position = i;
        let push = |out: &mut Vec<Lexeme>, kind| out.push(Lexeme { kind, position });
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if opts.fraction_literals && matches!(c, '(' | '（') {
            if let Some(m) = fraction_prefix().find(&text[byte..]) {
                let surface = m.as_str();
                let mut inner = surface.chars();
                inner.next();
                inner.next_back();
                let value = numeric::parse_unsigned_literal(inner.as_str())
                    .ok_or_else(|| ParseError::BadLiteral { position, text: surface.to_owned() })?;
                push(&mut out, LexKind::Literal(value));
                i += surface.chars().count();
                continue;
            }
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            if i < chars.len() && chars[i].1 == '%' {
                i += 1;
            }
            let end_byte = chars.get(i).map_or(text.len(), |&(b, _)| b);
            let surface = &text[byte..end_byte];
            let value = numeric::parse_unsigned_literal(surface)
                .ok_or_else(|| ParseError::BadLiteral { position: start, text: surface.to_owned() })?;
            push(&mut out, LexKind::Literal(value));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let end_byte = chars.get(i).map_or(text.len(), |&(b, _)| b);
            let word = &text[byte..end_byte];
            let kind = if word == "x" || word == "X" {
                LexKind::Unknown
            } else if let Some(t) = NumberToken::parse(word) {
                LexKind::Number(t)
            } else {
                return Err(ParseError::UnknownSymbol { position: start, symbol: word.to_owned() });
            };
            out.push(Lexeme { kind, position: start });
            continue;
        }
        let kind = match c {
            '(' | '[' | '（' => LexKind::LParen,
            ')' | ']' | '）' => LexKind::RParen,
            '=' => LexKind::Equals,
            _ => match Op::from_symbol(c) {
                Some(op) => LexKind::Op(op),
                None => return Err(ParseError::UnknownSymbol { position, symbol: c.to_string() }),
            },
        };
        push(&mut out, kind);
        i += 1;
    }
    Ok(out)
}

/// Strips an optional `x =` prefix, rejecting any other placement of the
/// unknown.
pub fn strip_unknown(lexemes: &[Lexeme]) -> Result<&[Lexeme], ParseError> {
    let rhs = match lexemes.iter().position(|l| l.kind == LexKind::Equals) {
        Some(eq) => {
            let lhs = &lexemes[..eq];
            match lhs {
                [Lexeme { kind: LexKind::Unknown, .. }] => &lexemes[eq + 1..],
                _ => {
                    if let Some(u) = lhs.iter().find(|l| l.kind == LexKind::Unknown) {
                        return Err(ParseError::MisplacedUnknown { position: u.position });
                    }
                    return Err(ParseError::BadLeftHandSide);
                }
            }
        }
        None => lexemes,
    };
    if let Some(u) = rhs.iter().find(|l| matches!(l.kind, LexKind::Unknown)) {
        return Err(ParseError::MisplacedUnknown { position: u.position });
    }
    if let Some(e) = rhs.iter().find(|l| l.kind == LexKind::Equals) {
        return Err(ParseError::UnexpectedToken { position: e.position, found: e.kind.to_string() });
    }
    Ok(rhs)
}

struct Parser<'a> {
    lexemes: &'a [Lexeme],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Lexeme> {
        self.lexemes.get(self.pos)
    }

    fn peek_op(&self) -> Option<Op> {
        match self.peek() {
            Some(Lexeme { kind: LexKind::Op(op), .. }) => Some(*op),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek_op().filter(|op| op.is_additive()) {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::node(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_op().filter(|op| op.is_multiplicative()) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::node(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_op() == Some(Op::Sub) {
            self.pos += 1;
            let operand = self.unary()?;
            return Ok(Expr::node(Op::Sub, Expr::int(0), operand));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek_op() == Some(Op::Pow) {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::node(Op::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(lexeme) = self.peek() else {
            return Err(ParseError::UnexpectedEnd { position: self.end });
        };
        self.pos += 1;
        match &lexeme.kind {
            LexKind::Number(t) => Ok(Expr::Leaf(Operand::Number(*t))),
            LexKind::Literal(v) => Ok(Expr::constant(v.clone())),
            LexKind::LParen => {
                let inner = self.expr()?;
                match self.peek() {
                    Some(Lexeme { kind: LexKind::RParen, .. }) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(other) => {
                        Err(ParseError::UnexpectedToken { position: other.position, found: other.kind.to_string() })
                    }
                    None => Err(ParseError::UnbalancedParen { position: lexeme.position }),
                }
            }
            LexKind::RParen => Err(ParseError::UnbalancedParen { position: lexeme.position }),
            other => Err(ParseError::UnexpectedToken { position: lexeme.position, found: other.to_string() }),
        }
    }
}

/// Parses a lexeme slice that no longer contains `x =`. `end` is the
/// character offset reported for premature end of input.
pub fn parse_lexemes(lexemes: &[Lexeme], end: usize) -> Result<Expr, ParseError> {
    if lexemes.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser { lexemes, pos: 0, end };
    let tree = parser.expr()?;
    match parser.peek() {
        None => Ok(tree),
        Some(Lexeme { kind: LexKind::RParen, position }) => Err(ParseError::UnbalancedParen { position: *position }),
        Some(other) => Err(ParseError::UnexpectedToken { position: other.position, found: other.kind.to_string() }),
    }
}

pub fn parse_infix(text: &str) -> Result<Expr, ParseError> {
    parse_infix_with(text, ParseOptions::default())
}

pub fn parse_infix_with(text: &str, opts: ParseOptions) -> Result<Expr, ParseError> {
    let lexemes = lex(text, opts)?;
    let body = strip_unknown(&lexemes)?;
    parse_lexemes(body, text.chars().count())
}

pub fn to_infix(tree: &Expr) -> String {
    let mut out = String::new();
    write_infix(tree, &mut out);
    out
}

fn binding(tree: &Expr) -> u8 {
    tree.op().map_or(u8::MAX, Op::precedence)
}

fn write_infix(tree: &Expr, out: &mut String) {
    match tree {
        Expr::Leaf(Operand::Constant(c)) if c.is_negative() || !numeric::is_terminating(c) => {
            let _ = write!(out, "({})", numeric::format_decimal(c));
        }
        Expr::Leaf(leaf) => {
            let _ = write!(out, "{leaf}");
        }
        Expr::Node(op, l, r) => {
            let p = op.precedence();
            let wrap_left = binding(l) < p || (binding(l) == p && op.is_right_assoc());
            let wrap_right = binding(r) < p || (binding(r) == p && !op.is_right_assoc());
            write_child(l, wrap_left, out);
            out.push(op.symbol());
            write_child(r, wrap_right, out);
        }
    }
}

fn write_child(tree: &Expr, wrap: bool, out: &mut String) {
    if wrap {
        out.push('(');
        write_infix(tree, out);
        out.push(')');
    } else {
        write_infix(tree, out);
    }
}

/// True for the `0 - x` shape produced by unary minus.
pub fn is_negation(tree: &Expr) -> bool {
    matches!(tree, Expr::Node(Op::Sub, l, _) if matches!(l.as_ref(), Expr::Leaf(Operand::Constant(c)) if c.is_zero()))
}
