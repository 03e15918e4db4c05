//! Randomized exact-evaluation equivalence check between two templates.

use num_rational::BigRational;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{evaluate, ExactValue};
use crate::expr::{Expr, Operand};

/// Redraws allowed per trial when an assignment makes either side undefined.
pub const MAX_REDRAWS: usize = 10;

/// Default number of oracle trials.
pub const DEFAULT_TRIALS: usize = 20;

const APPROX_RELATIVE: f64 = 1e-9;

/// Distinct nonzero values assigned to number tokens.
#[rustfmt::skip]
const POOL: [(i64, i64); 24] = [
    (2, 1), (3, 1), (5, 1), (7, 1), (11, 1), (13, 1),
    (1, 2), (1, 3), (2, 3), (3, 2), (5, 2), (4, 3),
    (7, 3), (3, 4), (5, 4), (7, 4), (2, 5), (3, 5),
    (6, 5), (9, 5), (5, 6), (7, 6), (4, 7), (9, 7),
];

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("at least one trial is required")]
    NoTrials,
    #[error("every trial was skipped: no assignment evaluated on both sides")]
    AllTrialsSkipped,
}

/// Outcome counts of an oracle run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleReport {
    pub completed: usize,
    pub skipped: usize,
    pub agreed: usize,
}

impl OracleReport {
    pub fn equivalent(&self) -> bool {
        self.completed > 0 && self.agreed == self.completed
    }
}

fn max_token(tree: &Expr) -> u32 {
    tree.leaves()
        .into_iter()
        .filter_map(|leaf| match leaf {
            Operand::Number(t) => Some(t.index()),
            Operand::Constant(_) => None,
        })
        .max()
        .unwrap_or(0)
}

fn draw(rng: &mut impl Rng, count: usize) -> Vec<BigRational> {
    let pick = |i: usize| {
        let (n, d) = POOL[i];
        BigRational::new(n.into(), d.into())
    };
    if count <= POOL.len() {
        sample(rng, POOL.len(), count).into_iter().map(pick).collect()
    } else {
        (0..count).map(|_| pick(rng.random_range(0..POOL.len()))).collect()
    }
}

fn agree(a: &ExactValue, b: &ExactValue) -> bool {
    match (a, b) {
        (ExactValue::Exact(x), ExactValue::Exact(y)) => x == y,
        _ => {
            let (x, y) = (a.to_f64(), b.to_f64());
            (x - y).abs() <= APPROX_RELATIVE * x.abs().max(y.abs()).max(1.0)
        }
    }
}

/// Runs the oracle and reports per-trial counts.
pub fn oracle_report(a: &Expr, b: &Expr, trials: usize, seed: u64) -> Result<OracleReport, OracleError> {
    if trials == 0 {
        return Err(OracleError::NoTrials);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = max_token(a).max(max_token(b)) as usize;
    let mut report = OracleReport::default();
    for _ in 0..trials {
        let mut verdict = None;
        for _ in 0..=MAX_REDRAWS {
            let values = draw(&mut rng, count);
            if let (Ok(x), Ok(y)) = (evaluate(a, &values), evaluate(b, &values)) {
                verdict = Some(agree(&x, &y));
                break;
            }
        }
        match verdict {
            Some(same) => {
                report.completed += 1;
                report.agreed += usize::from(same);
            }
            None => report.skipped += 1,
        }
    }
    if report.completed == 0 {
        return Err(OracleError::AllTrialsSkipped);
    }
    Ok(report)
}

/// True iff `a` and `b` agree exactly on every completed random trial.
pub fn equivalent_by_oracle(a: &Expr, b: &Expr, trials: usize, seed: u64) -> Result<bool, OracleError> {
    oracle_report(a, b, trials, seed).map(|r| r.equivalent())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infix::parse_infix;

    fn p(s: &str) -> Expr {
        parse_infix(s).unwrap()
    }

    #[test]
    fn bracket_pair_equivalent() {
        assert_eq!(equivalent_by_oracle(&p("n1+(n3-n2)"), &p("n1+n3-n2"), 20, 7), Ok(true));
    }

    #[test]
    fn swapped_difference_differs() {
        assert_eq!(equivalent_by_oracle(&p("n1-n2"), &p("n2-n1"), 20, 7), Ok(false));
    }

    #[test]
    fn reflexive() {
        let t = p("n1*(n2+n3)/n4");
        assert_eq!(equivalent_by_oracle(&t, &t, 20, 0), Ok(true));
    }

    #[test]
    fn undefined_everywhere() {
        let t = p("n1/(n2-n2)");
        assert_eq!(equivalent_by_oracle(&t, &t, 5, 0), Err(OracleError::AllTrialsSkipped));
        assert_eq!(equivalent_by_oracle(&t, &t, 0, 0), Err(OracleError::NoTrials));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = p("n1*n2+n3");
        let b = p("n2*n1+n3");
        assert_eq!(oracle_report(&a, &b, 20, 3), oracle_report(&a, &b, 20, 3));
        assert_eq!(oracle_report(&a, &b, 20, 3).unwrap().completed, 20);
    }
}
