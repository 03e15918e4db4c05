#![allow(dead_code)]

use eqnorm_core::eval::{evaluate, ExactValue};
use eqnorm_core::{Expr, Op};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_TOKEN: u32 = 6;
pub const MAX_DEPTH: usize = 6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random tree over `n1..n6` and the constants 1 and 2, at most `depth`
/// levels deep. Exponents are always a single leaf.
pub fn random_tree(rng: &mut impl Rng, depth: usize) -> Expr {
    if depth <= 1 || rng.random_bool(0.25) {
        return random_leaf(rng);
    }
    let op = match rng.random_range(0..9) {
        0 | 1 => Op::Add,
        2 | 3 => Op::Sub,
        4 | 5 => Op::Mul,
        6 | 7 => Op::Div,
        _ => Op::Pow,
    };
    let lhs = random_tree(rng, depth - 1);
    let rhs = if op == Op::Pow { random_leaf(rng) } else { random_tree(rng, depth - 1) };
    Expr::node(op, lhs, rhs)
}

pub fn random_leaf(rng: &mut impl Rng) -> Expr {
    if rng.random_bool(0.15) {
        Expr::int(rng.random_range(1..=2))
    } else {
        Expr::number(rng.random_range(1..=MAX_TOKEN))
    }
}

pub fn trees(seed: u64, count: usize) -> Vec<Expr> {
    let mut r = rng(seed);
    (0..count).map(|_| random_tree(&mut r, MAX_DEPTH)).collect()
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Distinct positive bindings for `n1..n6`.
pub fn random_bindings(rng: &mut impl Rng) -> Vec<BigRational> {
    let mut pool: Vec<(i64, i64)> = (1..=40).flat_map(|n| [(n, 1), (n, 3), (n, 7)]).collect();
    pool.shuffle(rng);
    pool.into_iter().take(MAX_TOKEN as usize).map(|(n, d)| rational(n, d)).collect()
}

/// Whether the tree has a value under at least one of a few bindings.
pub fn defined_somewhere(tree: &Expr, seed: u64) -> bool {
    let mut r = rng(seed);
    (0..8).any(|_| evaluate(tree, &random_bindings(&mut r)[..]).is_ok())
}

pub fn close(a: &ExactValue, b: &ExactValue) -> bool {
    match (a, b) {
        (ExactValue::Exact(x), ExactValue::Exact(y)) => x == y,
        _ => {
            let (x, y) = (a.to_f64(), b.to_f64());
            (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1.0)
        }
    }
}

/// A flat chain of signed sub-templates over distinct tokens.
#[derive(Clone, Debug)]
pub enum Base {
    Token(u32),
    Chain { multiplicative: bool, terms: Vec<(Base, bool)> },
}

/// A random base over distinct tokens: a chain whose terms are tokens or
/// chains of the other kind. Every chain starts with a direct term.
pub fn random_base(rng: &mut impl Rng) -> Base {
    let mut tokens: Vec<u32> = (1..=MAX_TOKEN).collect();
    tokens.shuffle(rng);
    let used = rng.random_range(3..=MAX_TOKEN as usize);
    tokens.truncate(used);
    let multiplicative = rng.random_bool(0.5);
    base_chain(rng, &mut tokens, multiplicative)
}

fn base_chain(rng: &mut impl Rng, tokens: &mut Vec<u32>, multiplicative: bool) -> Base {
    let mut terms = Vec::new();
    while !tokens.is_empty() && (terms.len() < 2 || rng.random_bool(0.5)) {
        let inverse = !terms.is_empty() && rng.random_bool(0.4);
        let term = if tokens.len() >= 3 && !terms.is_empty() && rng.random_bool(0.3) {
            let mut sub: Vec<u32> = tokens.drain(..2).collect();
            base_chain(rng, &mut sub, !multiplicative)
        } else {
            Base::Token(tokens.pop().unwrap())
        };
        terms.push((term, inverse));
    }
    if terms.len() == 1 {
        return terms.pop().unwrap().0;
    }
    Base::Chain { multiplicative, terms }
}

/// The base written straight, left to right with no brackets beyond the
/// ones its structure needs.
pub fn canonical_tree(base: &Base) -> Expr {
    match base {
        Base::Token(t) => Expr::number(*t),
        Base::Chain { multiplicative, terms } => {
            let (direct, inverse) = ops(*multiplicative);
            let mut it = terms.iter();
            let mut acc = canonical_tree(&it.next().unwrap().0);
            for (term, inv) in it {
                acc = Expr::node(if *inv { inverse } else { direct }, acc, canonical_tree(term));
            }
            acc
        }
    }
}

/// A value-equal tree for the base with every chain shuffled (keeping a
/// direct term first) and random sub-chains wrapped in brackets.
pub fn variant(rng: &mut impl Rng, base: &Base) -> Expr {
    match base {
        Base::Token(t) => Expr::number(*t),
        Base::Chain { multiplicative, terms } => {
            let mut rendered: Vec<(Expr, bool)> = terms.iter().map(|(b, inv)| (variant(rng, b), *inv)).collect();
            rendered.shuffle(rng);
            let head = rendered.iter().position(|t| !t.1).expect("a direct term");
            rendered.swap(0, head);
            bracketed(rng, rendered, *multiplicative)
        }
    }
}

fn ops(multiplicative: bool) -> (Op, Op) {
    if multiplicative {
        (Op::Mul, Op::Div)
    } else {
        (Op::Add, Op::Sub)
    }
}

fn bracketed(rng: &mut impl Rng, mut terms: Vec<(Expr, bool)>, multiplicative: bool) -> Expr {
    let (direct, inverse) = ops(multiplicative);
    let rest = terms.split_off(1);
    let mut acc = terms.pop().unwrap().0;
    let mut rest = rest.into_iter().peekable();
    while rest.peek().is_some() {
        let remaining = rest.len();
        let take = if remaining > 1 && rng.random_bool(0.35) { rng.random_range(2..=remaining) } else { 1 };
        let group: Vec<(Expr, bool)> = rest.by_ref().take(take).collect();
        let inverted = group[0].1;
        let inner: Vec<(Expr, bool)> = group.into_iter().map(|(t, inv)| (t, inv != inverted)).collect();
        let rhs =
            if inner.len() == 1 { inner.into_iter().next().unwrap().0 } else { bracketed(rng, inner, multiplicative) };
        acc = Expr::node(if inverted { inverse } else { direct }, acc, rhs);
    }
    acc
}
