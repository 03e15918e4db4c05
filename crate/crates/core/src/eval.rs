//! Exact evaluation of templates and solution-accuracy checks.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::expr::{Expr, Op, Operand};
use crate::numeric;
use crate::postorder::{self, InvalidSequence, PostorderToken};

/// Integer exponents beyond this magnitude are evaluated approximately.
pub const MAX_EXACT_EXPONENT: i64 = 4096;

/// Default relative tolerance for answer comparison.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// A rational result, or an approximate real once a non-integer power was
/// taken.
#[derive(Clone, Debug, PartialEq)]
pub enum ExactValue {
    Exact(BigRational),
    Approx(f64),
}

impl ExactValue {
    pub fn is_exact(&self) -> bool {
        matches!(self, ExactValue::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            ExactValue::Exact(v) => Some(v),
            ExactValue::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExactValue::Exact(v) => v.to_f64().unwrap_or(f64::NAN),
            ExactValue::Approx(v) => *v,
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            ExactValue::Exact(v) => v.is_zero(),
            ExactValue::Approx(v) => *v == 0.0,
        }
    }
}

impl From<BigRational> for ExactValue {
    fn from(v: BigRational) -> Self {
        ExactValue::Exact(v)
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactValue::Exact(v) => f.write_str(&numeric::format_rational(v)),
            ExactValue::Approx(v) => write!(f, "~{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("token n{0} is not bound")]
    UnboundToken(u32),
    #[error("zero raised to a negative power")]
    ZeroToNegativePower,
    #[error("power has no real value")]
    NonReal,
}

/// Values for number tokens.
pub trait Bindings {
    fn value_of(&self, index: u32) -> Option<&BigRational>;
}

impl Bindings for [BigRational] {
    fn value_of(&self, index: u32) -> Option<&BigRational> {
        self.get((index as usize).checked_sub(1)?)
    }
}

impl Bindings for Vec<BigRational> {
    fn value_of(&self, index: u32) -> Option<&BigRational> {
        self.as_slice().value_of(index)
    }
}

fn leaf_value(leaf: &Operand, bindings: &(impl Bindings + ?Sized)) -> Result<ExactValue, EvalError> {
    match leaf {
        Operand::Number(t) => {
            bindings.value_of(t.index()).cloned().map(ExactValue::Exact).ok_or(EvalError::UnboundToken(t.index()))
        }
        Operand::Constant(c) => Ok(ExactValue::Exact(c.clone())),
    }
}

pub fn evaluate(tree: &Expr, bindings: &(impl Bindings + ?Sized)) -> Result<ExactValue, EvalError> {
    match tree {
        Expr::Leaf(leaf) => leaf_value(leaf, bindings),
        Expr::Node(op, l, r) => {
            let lhs = evaluate(l, bindings)?;
            let rhs = evaluate(r, bindings)?;
            apply(*op, lhs, rhs)
        }
    }
}

/// Evaluates a postorder sequence with a value stack, without building a
/// tree.
pub fn evaluate_postorder<S: AsRef<str>>(
    tokens: &[S],
    bindings: &(impl Bindings + ?Sized),
) -> Result<ExactValue, SolveError> {
    use crate::postorder::InvalidReason;
    let invalid = |reason| SolveError::Invalid(InvalidSequence { reason });
    if tokens.is_empty() {
        return Err(invalid(InvalidReason::Empty));
    }
    let mut stack: Vec<ExactValue> = Vec::new();
    for (position, token) in tokens.iter().enumerate() {
        let token = token.as_ref();
        match postorder::classify(token) {
            Some(PostorderToken::Operand(leaf)) => stack.push(leaf_value(&leaf, bindings)?),
            Some(PostorderToken::Operator(op)) => {
                let (Some(rhs), Some(lhs)) = (stack.pop(), stack.pop()) else {
                    return Err(invalid(InvalidReason::StackUnderflow { position }));
                };
                stack.push(apply(op, lhs, rhs)?);
            }
            None => return Err(invalid(InvalidReason::UnknownToken { position, token: token.to_owned() })),
        }
    }
    match stack.len() {
        1 => Ok(stack.pop().unwrap()),
        count => Err(invalid(InvalidReason::LeftoverOperands { count })),
    }
}

/// Failure to obtain a value from a candidate sequence.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Invalid(#[from] InvalidSequence),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Parses and evaluates a postorder sequence.
pub fn solve_postorder<S: AsRef<str>>(
    tokens: &[S],
    bindings: &(impl Bindings + ?Sized),
) -> Result<ExactValue, SolveError> {
    let tree = postorder::parse_postorder(tokens)?;
    Ok(evaluate(&tree, bindings)?)
}

fn approx(v: f64) -> Result<ExactValue, EvalError> {
    if v.is_finite() {
        Ok(ExactValue::Approx(v))
    } else {
        Err(EvalError::NonReal)
    }
}

fn apply(op: Op, lhs: ExactValue, rhs: ExactValue) -> Result<ExactValue, EvalError> {
    if matches!(op, Op::Div) && rhs.is_zero() {
        return Err(EvalError::DivisionByZero);
    }
    if op == Op::Pow {
        return power(lhs, rhs);
    }
    match (lhs, rhs) {
        (ExactValue::Exact(a), ExactValue::Exact(b)) => Ok(ExactValue::Exact(match op {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / b,
            Op::Pow => unreachable!(),
        })),
        (a, b) => {
            let (a, b) = (a.to_f64(), b.to_f64());
            approx(match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
                Op::Pow => unreachable!(),
            })
        }
    }
}

fn power(base: ExactValue, exponent: ExactValue) -> Result<ExactValue, EvalError> {
    if base.is_zero() {
        let negative = match &exponent {
            ExactValue::Exact(e) => e.is_negative(),
            ExactValue::Approx(e) => *e < 0.0,
        };
        if negative {
            return Err(EvalError::ZeroToNegativePower);
        }
    }
    if let (ExactValue::Exact(b), ExactValue::Exact(e)) = (&base, &exponent) {
        if e.is_integer() {
            if let Some(k) = e.to_integer().to_i64().filter(|k| k.abs() <= MAX_EXACT_EXPONENT) {
                return Ok(ExactValue::Exact(b.pow(k as i32)));
            }
        }
    }
    approx(base.to_f64().powf(exponent.to_f64()))
}

/// Relative-band comparison: `|p - g| <= tol * max(1, |g|)`.
pub fn check_answer(predicted: &ExactValue, gold: &ExactValue, tolerance: f64) -> bool {
    if let (ExactValue::Exact(p), ExactValue::Exact(g)) = (predicted, gold) {
        let Some(tol) = BigRational::from_f64(tolerance) else {
            return false;
        };
        let one = BigRational::from_integer(BigInt::from(1));
        let scale = if g.abs() > one { g.abs() } else { one };
        return (p - g).abs() <= tol * scale;
    }
    let (p, g) = (predicted.to_f64(), gold.to_f64());
    if !p.is_finite() || !g.is_finite() {
        return false;
    }
    (p - g).abs() <= tolerance * g.abs().max(1.0)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unparseable answer {0:?}")]
pub struct AnswerError(pub String);

/// Parses a gold answer: integers, decimals, percents, fractions.
pub fn parse_answer(text: &str) -> Result<ExactValue, AnswerError> {
    numeric::parse_literal(text).map(ExactValue::Exact).ok_or_else(|| AnswerError(text.to_owned()))
}

/// Replaces number tokens by their bound values.
pub fn instantiate(tree: &Expr, bindings: &(impl Bindings + ?Sized)) -> Result<Expr, EvalError> {
    let mut missing = None;
    let out = tree.map_leaves(&mut |leaf| match leaf {
        Operand::Number(t) => match bindings.value_of(t.index()) {
            Some(v) => Expr::constant(v.clone()),
            None => {
                missing.get_or_insert(t.index());
                Expr::Leaf(leaf.clone())
            }
        },
        Operand::Constant(_) => Expr::Leaf(leaf.clone()),
    });
    match missing {
        Some(k) => Err(EvalError::UnboundToken(k)),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infix::parse_infix;
    use crate::postorder::parse_postorder_str;

    fn ints(values: &[i64]) -> Vec<BigRational> {
        values.iter().map(|&v| BigRational::from_integer(v.into())).collect()
    }

    fn exact(n: i64, d: i64) -> ExactValue {
        ExactValue::Exact(BigRational::new(n.into(), d.into()))
    }

    #[test]
    fn worked_solution() {
        let t = parse_infix("n1+n3+n2-n4").unwrap();
        assert_eq!(evaluate(&t, &ints(&[5, 3, 4, 2])).unwrap(), exact(10, 1));
    }

    #[test]
    fn division_and_mixed_chains() {
        let t = parse_postorder_str("n1 n2 / n3 -").unwrap();
        assert_eq!(evaluate(&t, &ints(&[690, 15, 20])).unwrap(), exact(26, 1));
        let t = parse_postorder_str("n1 n2 * n3 * n2 n3 + /").unwrap();
        assert_eq!(evaluate(&t, &ints(&[500, 3, 2])).unwrap(), exact(600, 1));
    }

    #[test]
    fn errors() {
        let b = ints(&[1, 0]);
        assert_eq!(evaluate(&parse_infix("n1/n2").unwrap(), &b), Err(EvalError::DivisionByZero));
        assert_eq!(evaluate(&parse_infix("n1+n3").unwrap(), &b), Err(EvalError::UnboundToken(3)));
        assert_eq!(evaluate(&parse_infix("n2^(0-1)").unwrap(), &b), Err(EvalError::ZeroToNegativePower));
        assert_eq!(evaluate(&parse_infix("(0-4)^0.5").unwrap(), &b), Err(EvalError::NonReal));
    }

    #[test]
    fn powers() {
        let b = ints(&[2, 3]);
        assert_eq!(evaluate(&parse_infix("n1^n2").unwrap(), &b).unwrap(), exact(8, 1));
        assert_eq!(evaluate(&parse_infix("n1^(0-n2)").unwrap(), &b).unwrap(), exact(1, 8));
        let v = evaluate(&parse_infix("4^0.5").unwrap(), &b).unwrap();
        assert_eq!(v, ExactValue::Approx(2.0));
        let v = evaluate(&parse_infix("n1^0.5+1").unwrap(), &b).unwrap();
        assert!(!v.is_exact());
    }

    #[test]
    fn stack_machine_matches_tree() {
        let b = ints(&[500, 3, 2]);
        let seq = ["n1", "n2", "*", "n3", "*", "n2", "n3", "+", "/"];
        assert_eq!(evaluate_postorder(&seq, &b).unwrap(), exact(600, 1));
        assert!(matches!(evaluate_postorder(&["n2", "n1", "n3", "n3", "+"], &b), Err(SolveError::Invalid(_))));
    }

    #[test]
    fn answer_band() {
        let ten = exact(10, 1);
        assert!(check_answer(&ten, &ten, 1e-4));
        assert!(check_answer(&exact(1_000_001, 100_000), &ten, 1e-4));
        assert!(!check_answer(&exact(26, 1), &ten, 1e-4));
        assert!(check_answer(&ExactValue::Approx(10.00001), &ten, 1e-4));
        assert!(!check_answer(&exact(10_001, 1000), &ten, 0.0));
        // band scales with |gold| beyond 1
        assert!(check_answer(&exact(100_005, 1), &exact(100_000, 1), 1e-4));
        assert!(!check_answer(&exact(1, 1000), &exact(0, 1), 1e-4));
    }

    #[test]
    fn answers() {
        assert_eq!(parse_answer("10").unwrap(), exact(10, 1));
        assert_eq!(parse_answer("80%").unwrap(), exact(4, 5));
        assert_eq!(parse_answer("5/4").unwrap(), exact(5, 4));
        assert_eq!(parse_answer("-2.5").unwrap(), exact(-5, 2));
        assert!(parse_answer("about ten").is_err());
    }
}
