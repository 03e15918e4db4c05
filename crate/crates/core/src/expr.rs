//! Binary expression trees over number tokens and constants.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;

use crate::numeric;

/// Binary arithmetic operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl Op {
    pub const ALL: [Op; 5] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow];

    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
            Op::Pow => '^',
        }
    }

    pub fn from_symbol(c: char) -> Option<Op> {
        Some(match c {
            '+' => Op::Add,
            '-' => Op::Sub,
            '*' => Op::Mul,
            '/' => Op::Div,
            '^' => Op::Pow,
            _ => return None,
        })
    }

    pub fn precedence(self) -> u8 {
        match self {
            Op::Add | Op::Sub => 1,
            Op::Mul | Op::Div => 2,
            Op::Pow => 3,
        }
    }

    pub fn is_right_assoc(self) -> bool {
        self == Op::Pow
    }

    /// `+`/`-` chains.
    pub fn is_additive(self) -> bool {
        matches!(self, Op::Add | Op::Sub)
    }

    /// `*`/`/` chains.
    pub fn is_multiplicative(self) -> bool {
        matches!(self, Op::Mul | Op::Div)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// A 1-based number token `n<k>` referring to the k-th mapped number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NumberToken(u32);

impl NumberToken {
    pub fn new(index: u32) -> Option<Self> {
        (index >= 1).then_some(NumberToken(index))
    }

    pub fn index(self) -> u32 {
        self.0
    }

    /// Parses `n<k>` (also accepts `n_<k>`).
    pub fn parse(text: &str) -> Option<Self> {
        let digits = text.strip_prefix('n')?;
        let digits = digits.strip_prefix('_').unwrap_or(digits);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok().and_then(NumberToken::new)
    }
}

impl fmt::Display for NumberToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Leaf payload.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Number(NumberToken),
    Constant(BigRational),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Number(t) => t.fmt(f),
            Operand::Constant(c) => f.write_str(&numeric::format_decimal(c)),
        }
    }
}

/// Expression tree. Inner nodes always carry exactly two children; grouping
/// is expressed by structure alone.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Leaf(Operand),
    Node(Op, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn number(index: u32) -> Expr {
        Expr::Leaf(Operand::Number(NumberToken::new(index).expect("number tokens are 1-based")))
    }

    pub fn constant(value: BigRational) -> Expr {
        Expr::Leaf(Operand::Constant(value))
    }

    pub fn int(value: i64) -> Expr {
        Expr::constant(BigRational::from_integer(value.into()))
    }

    pub fn node(op: Op, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Node(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn op(&self) -> Option<Op> {
        match self {
            Expr::Node(op, ..) => Some(*op),
            Expr::Leaf(_) => None,
        }
    }

    /// Number of tokens in the postorder rendering.
    pub fn size(&self) -> usize {
        match self {
            Expr::Leaf(_) => 1,
            Expr::Node(_, l, r) => 1 + l.size() + r.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Leaf(_) => 1,
            Expr::Node(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Operand> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |leaf| out.push(leaf));
        out
    }

    fn visit_leaves<'a>(&'a self, f: &mut impl FnMut(&'a Operand)) {
        match self {
            Expr::Leaf(leaf) => f(leaf),
            Expr::Node(_, l, r) => {
                l.visit_leaves(f);
                r.visit_leaves(f);
            }
        }
    }

    pub fn min_token(&self) -> Option<u32> {
        self.leaves()
            .into_iter()
            .filter_map(|leaf| match leaf {
                Operand::Number(t) => Some(t.index()),
                Operand::Constant(_) => None,
            })
            .min()
    }

    /// Rewrites every leaf through `f`.
    pub fn map_leaves(&self, f: &mut impl FnMut(&Operand) -> Expr) -> Expr {
        match self {
            Expr::Leaf(leaf) => f(leaf),
            Expr::Node(op, l, r) => Expr::node(*op, l.map_leaves(f), r.map_leaves(f)),
        }
    }
}

/// The postorder rendering.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::postorder::to_postorder(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
pub struct BadToken(pub String);

/// Space-separated surface token sequence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn new(tokens: Vec<String>) -> Result<Self, BadToken> {
        if let Some(bad) = tokens.iter().find(|t| t.is_empty() || t.chars().any(char::is_whitespace)) {
            return Err(BadToken(bad.clone()));
        }
        Ok(TokenSeq(tokens))
    }

    pub(crate) fn from_trusted(tokens: Vec<String>) -> Self {
        TokenSeq(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

impl FromStr for TokenSeq {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(TokenSeq(s.split_whitespace().map(str::to_owned).collect()))
    }
}
