//! Postorder (left, right, operator) encoding and stack-based decoding.

use std::fmt;

use crate::expr::{Expr, NumberToken, Op, Operand, TokenSeq};
use crate::numeric;

/// Why a token sequence does not describe exactly one expression tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvalidReason {
    Empty,
    /// An operator at `position` found fewer than two operands.
    StackUnderflow {
        position: usize,
    },
    /// The sequence ended with `count` > 1 operands on the stack.
    LeftoverOperands {
        count: usize,
    },
    UnknownToken {
        position: usize,
        token: String,
    },
}

/// A malformed postorder sequence. This is an ordinary outcome for model
/// outputs, not a fault.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid postorder sequence: {reason}")]
pub struct InvalidSequence {
    pub reason: InvalidReason,
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::Empty => write!(f, "empty"),
            InvalidReason::StackUnderflow { position } => {
                write!(f, "stack underflow at token {position}")
            }
            InvalidReason::LeftoverOperands { count } => {
                write!(f, "{count} leftover operands")
            }
            InvalidReason::UnknownToken { position, token } => {
                write!(f, "unknown token {token:?} at {position}")
            }
        }
    }
}

impl InvalidReason {
    pub fn kind(&self) -> &'static str {
        match self {
            InvalidReason::Empty => "empty",
            InvalidReason::StackUnderflow { .. } => "stack_underflow",
            InvalidReason::LeftoverOperands { .. } => "leftover_operands",
            InvalidReason::UnknownToken { .. } => "unknown_token",
        }
    }
}

/// One decoded postorder token.
#[derive(Clone, Debug, PartialEq)]
pub enum PostorderToken {
    Operand(Operand),
    Operator(Op),
}

/// Classifies a single surface token.
pub fn classify(token: &str) -> Option<PostorderToken> {
    let mut chars = token.chars();
    if let (Some(c), None) = (chars.next(), chars.next()) {
        if let Some(op) = Op::from_symbol(c) {
            return Some(PostorderToken::Operator(op));
        }
    }
    if let Some(t) = NumberToken::parse(token) {
        return Some(PostorderToken::Operand(Operand::Number(t)));
    }
    numeric::parse_literal(token).map(|v| PostorderToken::Operand(Operand::Constant(v)))
}

pub fn to_postorder(tree: &Expr) -> TokenSeq {
    let mut out = Vec::with_capacity(tree.size());
    push_postorder(tree, &mut out);
    TokenSeq::from_trusted(out)
}

fn push_postorder(tree: &Expr, out: &mut Vec<String>) {
    match tree {
        Expr::Leaf(leaf) => out.push(leaf.to_string()),
        Expr::Node(op, l, r) => {
            push_postorder(l, out);
            push_postorder(r, out);
            out.push(op.to_string());
        }
    }
}

pub fn parse_postorder<S: AsRef<str>>(tokens: &[S]) -> Result<Expr, InvalidSequence> {
    let invalid = |reason| Err(InvalidSequence { reason });
    if tokens.is_empty() {
        return invalid(InvalidReason::Empty);
    }
    let mut stack: Vec<Expr> = Vec::new();
    for (position, token) in tokens.iter().enumerate() {
        let token = token.as_ref();
        match classify(token) {
            Some(PostorderToken::Operand(leaf)) => stack.push(Expr::Leaf(leaf)),
            Some(PostorderToken::Operator(op)) => {
                let (Some(rhs), Some(lhs)) = (stack.pop(), stack.pop()) else {
                    return invalid(InvalidReason::StackUnderflow { position });
                };
                stack.push(Expr::node(op, lhs, rhs));
            }
            None => return invalid(InvalidReason::UnknownToken { position, token: token.to_owned() }),
        }
    }
    match stack.len() {
        1 => Ok(stack.pop().unwrap()),
        count => invalid(InvalidReason::LeftoverOperands { count }),
    }
}

/// Parses whitespace-separated postorder text.
pub fn parse_postorder_str(text: &str) -> Result<Expr, InvalidSequence> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    parse_postorder(&tokens)
}
