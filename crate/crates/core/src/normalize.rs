//! Equation normalization.
//!
//! Three passes, each toggleable:
//!
//! * **SE** (shorter equation): cancel structurally identical term pairs of
//!   opposite sign in a `+`/`-` chain, and identical numerator/denominator
//!   factor pairs in a `*`/`/` chain.
//! * **OE** (ordered equation): inside each chain, positive terms (numerator
//!   factors) come first, then negative terms (denominator factors); each
//!   class sorts ascending by [`canonical_key`], which orders by the smallest
//!   number-token index a subtree uses.
//! * **EB** (eliminate brackets): parenthesized sub-chains of the same kind
//!   are spliced into the enclosing chain with signs distributed, so the
//!   result is a left-leaning binary chain.
//!
//! Without EB a parenthesized sub-chain stays a single opaque term of its
//! enclosing chain and is normalized on its own. `^` subtrees are always
//! opaque factors.
//!
//! Cancellation never removes the last positive term of a chain, so a chain
//! never needs an invented `0 -` or `1 /` head. With OE off it also never
//! exposes a negative term at the head.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Op};
use crate::postorder::to_postorder;

/// Which normalization passes run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizeConfig {
    pub enable_se: bool,
    pub enable_oe: bool,
    pub enable_eb: bool,
}

impl NormalizeConfig {
    pub const ALL: NormalizeConfig = NormalizeConfig { enable_se: true, enable_oe: true, enable_eb: true };
    pub const NONE: NormalizeConfig = NormalizeConfig { enable_se: false, enable_oe: false, enable_eb: false };
    pub const SE_ONLY: NormalizeConfig = NormalizeConfig { enable_se: true, ..Self::NONE };
    pub const OE_ONLY: NormalizeConfig = NormalizeConfig { enable_oe: true, ..Self::NONE };
    pub const EB_ONLY: NormalizeConfig = NormalizeConfig { enable_eb: true, ..Self::NONE };

    /// All eight combinations.
    pub fn all_combinations() -> impl Iterator<Item = NormalizeConfig> {
        (0u8..8).map(|bits| NormalizeConfig {
            enable_se: bits & 1 != 0,
            enable_oe: bits & 2 != 0,
            enable_eb: bits & 4 != 0,
        })
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.enable_se {
            parts.push("SE");
        }
        if self.enable_oe {
            parts.push("OE");
        }
        if self.enable_eb {
            parts.push("EB");
        }
        if parts.is_empty() {
            "none".to_owned()
        } else {
            parts.join("+")
        }
    }
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig::ALL
    }
}

/// Sort key: smallest number-token index (constant-only subtrees sort
/// last), then the postorder string.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CanonicalKey {
    pub min_token: Option<u32>,
    pub postorder: String,
}

impl Ord for CanonicalKey {
    fn cmp(&self, other: &Self) -> Ordering {
        let rank = |k: &CanonicalKey| k.min_token.map_or((1, 0), |i| (0, i));
        rank(self).cmp(&rank(other)).then_with(|| self.postorder.cmp(&other.postorder))
    }
}

impl PartialOrd for CanonicalKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn canonical_key(subtree: &Expr) -> CanonicalKey {
    CanonicalKey { min_token: subtree.min_token(), postorder: to_postorder(subtree).to_string() }
}

/// `+`/`-` or `*`/`/`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainKind {
    Additive,
    Multiplicative,
}

impl ChainKind {
    pub fn of(op: Op) -> Option<ChainKind> {
        if op.is_additive() {
            Some(ChainKind::Additive)
        } else if op.is_multiplicative() {
            Some(ChainKind::Multiplicative)
        } else {
            None
        }
    }

    fn ops(self) -> (Op, Op) {
        match self {
            ChainKind::Additive => (Op::Add, Op::Sub),
            ChainKind::Multiplicative => (Op::Mul, Op::Div),
        }
    }

    fn heads(self, tree: &Expr) -> bool {
        tree.op().and_then(ChainKind::of) == Some(self)
    }
}

/// One term of a chain. `inverse` marks a subtracted term or a divisor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatTerm {
    pub inverse: bool,
    pub expr: Expr,
}

/// A `+`/`-` or `*`/`/` chain as an ordered list of signed terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatChain {
    pub kind: ChainKind,
    pub terms: Vec<FlatTerm>,
}

impl FlatChain {
    /// Flattens the chain rooted at `tree`. Left operands always join the
    /// chain; right operands of the same kind are spliced only with
    /// `splice_brackets`, otherwise they stay one opaque term.
    pub fn flatten(tree: &Expr, splice_brackets: bool) -> Option<FlatChain> {
        let kind = ChainKind::of(tree.op()?)?;
        let mut terms = Vec::new();
        collect(tree, kind, false, splice_brackets, &mut terms);
        Some(FlatChain { kind, terms })
    }

    /// Rebuilds a left-leaning chain. Returns `None` if the chain is empty
    /// or starts with an inverse term.
    pub fn rebuild(&self) -> Option<Expr> {
        let (first, rest) = self.terms.split_first()?;
        if first.inverse {
            return None;
        }
        let (direct, inverse) = self.kind.ops();
        Some(rest.iter().fold(first.expr.clone(), |acc, term| {
            let op = if term.inverse { inverse } else { direct };
            Expr::node(op, acc, term.expr.clone())
        }))
    }
}

fn collect(tree: &Expr, kind: ChainKind, inverse: bool, splice: bool, out: &mut Vec<FlatTerm>) {
    match tree {
        Expr::Node(op, l, r) if ChainKind::of(*op) == Some(kind) => {
            collect(l, kind, inverse, splice, out);
            let flips = matches!(op, Op::Sub | Op::Div);
            let r_inverse = inverse ^ flips;
            if splice && kind.heads(r) {
                collect(r, kind, r_inverse, splice, out);
            } else {
                out.push(FlatTerm { inverse: r_inverse, expr: (**r).clone() });
            }
        }
        other => out.push(FlatTerm { inverse, expr: other.clone() }),
    }
}

const MAX_ROUNDS: usize = 64;

/// Normalizes `tree` under `cfg`. Deterministic and idempotent: the passes
/// are repeated until the tree stops changing.
pub fn normalize(tree: &Expr, cfg: NormalizeConfig) -> Expr {
    let mut current = normalize_once(tree, cfg);
    for _ in 0..MAX_ROUNDS {
        let next = normalize_once(&current, cfg);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn normalize_once(tree: &Expr, cfg: NormalizeConfig) -> Expr {
    match tree {
        Expr::Leaf(_) => tree.clone(),
        Expr::Node(Op::Pow, base, exponent) => {
            Expr::node(Op::Pow, normalize_once(base, cfg), normalize_once(exponent, cfg))
        }
        Expr::Node(..) => {
            let mut chain = FlatChain::flatten(tree, cfg.enable_eb).expect("operator node");
            for term in &mut chain.terms {
                term.expr = normalize_once(&term.expr, cfg);
            }
            if cfg.enable_oe {
                order_terms(&mut chain.terms);
            }
            if cfg.enable_se {
                cancel_pairs(&mut chain.terms, cfg.enable_oe);
            }
            chain.rebuild().expect("chains keep a direct head term")
        }
    }
}

/// Direct terms first, then inverse terms, each ascending by canonical key.
/// Left untouched if there is no direct term.
fn order_terms(terms: &mut [FlatTerm]) {
    if terms.iter().all(|t| t.inverse) {
        return;
    }
    terms.sort_by_cached_key(|t| (t.inverse, canonical_key(&t.expr)));
}

fn cancel_pairs(terms: &mut Vec<FlatTerm>, ordered: bool) {
    let mut removed = vec![false; terms.len()];
    for j in 0..terms.len() {
        if removed[j] || !terms[j].inverse {
            continue;
        }
        let Some(i) = (0..terms.len()).find(|&i| !removed[i] && !terms[i].inverse && terms[i].expr == terms[j].expr)
        else {
            continue;
        };
        removed[i] = true;
        removed[j] = true;
        let mut remaining = (0..terms.len()).filter(|&k| !removed[k]);
        let keeps_head = if ordered {
            (0..terms.len()).any(|k| !removed[k] && !terms[k].inverse)
        } else {
            remaining.next().is_some_and(|k| !terms[k].inverse)
        };
        if !keeps_head {
            removed[i] = false;
            removed[j] = false;
        }
    }
    let mut k = 0;
    terms.retain(|_| {
        k += 1;
        !removed[k - 1]
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infix::{parse_infix, to_infix};

    fn norm(text: &str, cfg: NormalizeConfig) -> String {
        to_infix(&normalize(&parse_infix(text).unwrap(), cfg))
    }

    #[test]
    fn ordering_rule() {
        assert_eq!(norm("n1+n3+n2", NormalizeConfig::ALL), "n1+n2+n3");
        assert_eq!(norm("n3+n1+n2", NormalizeConfig::ALL), "n1+n2+n3");
        assert_eq!(norm("n1+n2+n3", NormalizeConfig::ALL), "n1+n2+n3");
    }

    #[test]
    fn shorter_rule() {
        assert_eq!(norm("n1+n2+n3+n3-n3", NormalizeConfig::ALL), "n1+n2+n3");
        assert_eq!(norm("n1+n2+n3+n3-n3", NormalizeConfig::SE_ONLY), "n1+n2+n3");
        assert_eq!(norm("n1*n2/n2", NormalizeConfig::ALL), "n1");
    }

    #[test]
    fn bracket_elimination() {
        let a = normalize(&parse_infix("n1+(n3-n2)").unwrap(), NormalizeConfig::ALL);
        let b = normalize(&parse_infix("n1+n3-n2").unwrap(), NormalizeConfig::ALL);
        assert_eq!(a, b);
        assert_eq!(to_infix(&a), "n1+n3-n2");
        assert_eq!(norm("n1+(n3-n2)", NormalizeConfig::EB_ONLY), "n1+n3-n2");
        assert_eq!(norm("n1-(n2-n3)", NormalizeConfig::EB_ONLY), "n1-n2+n3");
        assert_eq!(norm("n1-(n2-n3)", NormalizeConfig::ALL), "n1+n3-n2");
        assert_eq!(norm("n1/(n2/n3)", NormalizeConfig::ALL), "n1*n3/n2");
    }

    #[test]
    fn positives_before_negatives() {
        assert_eq!(norm("n1+n3+n2-n4", NormalizeConfig::ALL), "n1+n2+n3-n4");
        assert_eq!(norm("n4-n1+n2", NormalizeConfig::ALL), "n2+n4-n1");
        assert_eq!(norm("n3/n1*n2", NormalizeConfig::ALL), "n2*n3/n1");
    }

    #[test]
    fn cancellation_keeps_a_head() {
        assert_eq!(norm("n1-n1", NormalizeConfig::ALL), "n1-n1");
        assert_eq!(norm("n1/n1", NormalizeConfig::ALL), "n1/n1");
        // SE alone must not expose -n2 at the head
        assert_eq!(norm("n1-n2-n1+n3", NormalizeConfig::SE_ONLY), "n1-n2-n1+n3");
        assert_eq!(norm("n1-n2-n1+n3", NormalizeConfig::ALL), "n3-n2");
    }

    #[test]
    fn without_eb_groups_stay_opaque() {
        assert_eq!(norm("n1+(n3+n2)", NormalizeConfig::OE_ONLY), "n1+(n2+n3)");
        assert_eq!(norm("n1+(n3+n2)", NormalizeConfig::NONE), "n1+(n3+n2)");
        assert_eq!(norm("n1+(n2+n3)-(n2+n3)", NormalizeConfig::SE_ONLY), "n1");
    }

    #[test]
    fn powers_are_opaque() {
        assert_eq!(norm("(n2+n1)^(n4*n3)", NormalizeConfig::ALL), "(n1+n2)^(n3*n4)");
        assert_eq!(norm("n3*n1^n2", NormalizeConfig::ALL), "n1^n2*n3");
    }

    #[test]
    fn key_order() {
        assert_eq!(canonical_key(&Expr::number(3)), CanonicalKey { min_token: Some(3), postorder: "n3".into() });
        let k = canonical_key(&parse_infix("n2*n4").unwrap());
        assert_eq!(k, CanonicalKey { min_token: Some(2), postorder: "n2 n4 *".into() });
        let c = canonical_key(&Expr::int(1));
        assert_eq!(c.min_token, None);
        assert!(c > canonical_key(&Expr::number(1000)));
        assert_eq!(norm("1+n1", NormalizeConfig::ALL), "n1+1");
    }

    #[test]
    fn config_labels() {
        assert_eq!(NormalizeConfig::ALL.label(), "SE+OE+EB");
        assert_eq!(NormalizeConfig::NONE.label(), "none");
        assert_eq!(NormalizeConfig::all_combinations().count(), 8);
    }
}
