mod common;

use std::collections::{BTreeMap, HashSet};

use common::*;
use eqnorm_core::ensemble::{group_by_problem, select_one};
use eqnorm_core::eval::{evaluate, evaluate_postorder};
use eqnorm_core::mapping::{build_template, extract_numbers};
use eqnorm_core::numeric::format_decimal;
use eqnorm_core::oracle::equivalent_by_oracle;
use eqnorm_core::{
    normalize, parse_infix, parse_postorder, to_infix, to_postorder, Candidate, EnsembleConfig, Expr, NormalizeConfig,
    Operand, TokenSeq,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn tree_strategy() -> impl Strategy<Value = Expr> {
    any::<u64>().prop_map(|seed| random_tree(&mut rng(seed), MAX_DEPTH))
}

fn leaf_multiset(tree: &Expr) -> Vec<String> {
    let mut out: Vec<String> = to_postorder(tree)
        .tokens()
        .iter()
        .filter(|t| !matches!(t.as_str(), "+" | "-" | "*" | "/" | "^"))
        .cloned()
        .collect();
    out.sort();
    out
}

fn number_count(tree: &Expr) -> usize {
    tree.leaves().iter().filter(|l| matches!(l, Operand::Number(_))).count()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn postorder_round_trip(tree in tree_strategy()) {
        let seq = to_postorder(&tree);
        prop_assert_eq!(parse_postorder(seq.tokens()).unwrap(), tree.clone());
        let reparsed: TokenSeq = seq.to_string().parse().unwrap();
        prop_assert_eq!(reparsed, seq);
    }

    #[test]
    fn infix_round_trip(tree in tree_strategy()) {
        prop_assert_eq!(parse_infix(&to_infix(&tree)).unwrap(), tree);
    }

    #[test]
    fn stack_machine_matches_tree(tree in tree_strategy(), seed in any::<u64>()) {
        let values = random_bindings(&mut rng(seed));
        let seq = to_postorder(&tree);
        let by_tree = evaluate(&tree, &values[..]);
        let by_stack = evaluate_postorder(seq.tokens(), &values[..]);
        match (by_tree, by_stack) {
            (Ok(a), Ok(b)) => prop_assert!(close(&a, &b)),
            (Err(a), Err(eqnorm_core::eval::SolveError::Eval(b))) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "tree {:?} vs stack {:?}", a, b),
        }
    }

    #[test]
    fn proper_prefixes_are_invalid(tree in tree_strategy()) {
        let seq = to_postorder(&tree);
        let tokens = seq.tokens();
        for end in 1..tokens.len() {
            let depth = stack_depth(&tokens[..end]);
            if depth != Some(1) {
                prop_assert!(parse_postorder(&tokens[..end]).is_err());
            }
        }
    }

    #[test]
    fn validity_is_stack_discipline(raw in proptest::collection::vec(0usize..7, 1..12)) {
        let alphabet = ["n1", "n2", "n3", "+", "-", "*", "/"];
        let tokens: Vec<&str> = raw.iter().map(|&i| alphabet[i]).collect();
        prop_assert_eq!(parse_postorder(&tokens).is_ok(), stack_depth(&tokens) == Some(1));
    }

    #[test]
    fn normalize_is_idempotent(tree in tree_strategy()) {
        for cfg in NormalizeConfig::all_combinations() {
            let once = normalize(&tree, cfg);
            prop_assert_eq!(normalize(&once, cfg), once.clone(), "cfg {}", cfg.label());
        }
    }

    #[test]
    fn single_passes_keep_their_promises(tree in tree_strategy()) {
        let eb = normalize(&tree, NormalizeConfig::EB_ONLY);
        prop_assert_eq!(leaf_multiset(&eb), leaf_multiset(&tree));
        let oe = normalize(&tree, NormalizeConfig::OE_ONLY);
        prop_assert_eq!(to_postorder(&oe).len(), to_postorder(&tree).len());
        prop_assert_eq!(leaf_multiset(&oe), leaf_multiset(&tree));
        let se = normalize(&tree, NormalizeConfig::SE_ONLY);
        prop_assert!(se.size() <= tree.size());
        prop_assert!(number_count(&se) <= number_count(&tree));
        prop_assert_eq!(normalize(&tree, NormalizeConfig::NONE), tree);
    }

    #[test]
    fn ensemble_matches_product_argmax(groups in proptest::collection::vec(small_group(), 1..20), shift in -50.0f64..0.0) {
        let cfg = EnsembleConfig::new(vec!["m2".into(), "m0".into()]).unwrap();
        for group in &groups {
            let chosen = select_one(group, &cfg).unwrap();
            prop_assert_eq!(chosen, brute_force(group));
            let shifted: Vec<Candidate> = group.iter().map(|c| Candidate { log_prob: c.log_prob + shift, ..c.clone() }).collect();
            let again = select_one(&shifted, &cfg).unwrap();
            prop_assert_eq!(&again.model, &chosen.model);
        }
    }
}

fn stack_depth<S: AsRef<str>>(tokens: &[S]) -> Option<usize> {
    let mut depth = 0usize;
    for t in tokens {
        if matches!(t.as_ref(), "+" | "-" | "*" | "/" | "^") {
            depth = depth.checked_sub(2)? + 1;
        } else {
            depth += 1;
        }
    }
    Some(depth)
}

/// Scores on a coarse grid of probabilities so that exact ties are common.
fn small_group() -> impl Strategy<Value = Vec<Candidate>> {
    proptest::collection::vec(1u32..=8, 1..=3).prop_map(|levels| {
        levels
            .into_iter()
            .enumerate()
            .map(|(m, level)| Candidate {
                problem_id: "p".into(),
                model: format!("m{m}"),
                tokens: "n1 n2 +".parse().unwrap(),
                log_prob: (level as f64 / 8.0).ln(),
            })
            .collect()
    })
}

/// Argmax over probabilities, ties resolved by the priority `m2, m0` and
/// then by model id.
fn brute_force(group: &[Candidate]) -> &Candidate {
    let rank = |m: &str| match m {
        "m2" => (0, String::new()),
        "m0" => (1, String::new()),
        other => (2, other.to_owned()),
    };
    let best = group.iter().map(|c| c.log_prob.exp()).fold(f64::MIN, f64::max);
    group.iter().filter(|c| c.log_prob.exp() == best).min_by_key(|c| rank(&c.model)).unwrap()
}

#[test]
fn normalization_preserves_value() {
    let mut checked = 0;
    for (i, tree) in trees(7, 600).into_iter().enumerate() {
        if !defined_somewhere(&tree, i as u64) {
            continue;
        }
        checked += 1;
        for cfg in NormalizeConfig::all_combinations() {
            let norm = normalize(&tree, cfg);
            assert!(
                equivalent_by_oracle(&tree, &norm, 20, i as u64).unwrap(),
                "{} changed value under {}: {}",
                to_infix(&tree),
                cfg.label(),
                to_infix(&norm)
            );
        }
    }
    assert!(checked > 500);
}

#[test]
fn variants_collapse_to_one_template() {
    let mut r = rng(11);
    for _ in 0..300 {
        let base = random_base(&mut r);
        let target = normalize(&canonical_tree(&base), NormalizeConfig::ALL);
        for _ in 0..6 {
            let v = variant(&mut r, &base);
            assert_eq!(normalize(&v, NormalizeConfig::ALL), target, "variant {}", to_infix(&v));
        }
    }
}

#[test]
fn every_pass_shrinks_the_template_set() {
    let mut r = rng(5);
    let mut corpus = Vec::new();
    for _ in 0..80 {
        let base = random_base(&mut r);
        corpus.extend((0..5).map(|_| variant(&mut r, &base)));
    }
    corpus.extend(trees(6, 200));
    let count = |cfg: NormalizeConfig| corpus.iter().map(|t| normalize(t, cfg)).collect::<HashSet<_>>().len();
    let raw = corpus.iter().collect::<HashSet<_>>().len();
    let counts: BTreeMap<String, usize> =
        NormalizeConfig::all_combinations().map(|cfg| (cfg.label(), count(cfg))).collect();
    for (label, n) in &counts {
        assert!(*n <= raw, "{label}: {n} > raw {raw}");
    }
    let all = count(NormalizeConfig::ALL);
    for single in [NormalizeConfig::SE_ONLY, NormalizeConfig::OE_ONLY, NormalizeConfig::EB_ONLY] {
        assert!(all <= count(single), "{counts:?}");
    }
    assert!(all < raw);
}

#[test]
fn retemplating_recovers_the_tree() {
    let fraction = regex::Regex::new(r"\(\d+/\d+\)").unwrap();
    let mut r = rng(21);
    for _ in 0..500 {
        let tree = random_tree(&mut r, 5);
        let mut values: Vec<u32> = (3..=99).collect();
        values.shuffle(&mut r);
        let values: Vec<_> = values[..MAX_TOKEN as usize].iter().map(|&v| rational(v as i64, 1)).collect();
        let text: Vec<String> = values
            .iter()
            .flat_map(|v| [format_decimal(v), if r.random_bool(0.5) { "apples".into() } else { ",".into() }])
            .collect();
        let equation = format!("x={}", to_infix(&eqnorm_core::eval::instantiate(&tree, &values[..]).unwrap()));
        let record = build_template(&equation, &extract_numbers(&text)).unwrap();
        if fraction.is_match(&equation) {
            let a = evaluate(&record.template, record.mapping.values());
            let b = evaluate(&tree, &values[..]);
            assert_eq!(a.is_ok(), b.is_ok());
            if let (Ok(a), Ok(b)) = (a, b) {
                assert!(close(&a, &b), "{equation}");
            }
            continue;
        }
        let has_constant = tree.leaves().iter().any(|l| matches!(l, Operand::Constant(_)));
        assert_eq!(record.coverage, !has_constant);

        let mut used: Vec<u32> = tree
            .leaves()
            .iter()
            .filter_map(|l| match l {
                Operand::Number(t) => Some(t.index()),
                Operand::Constant(_) => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        let expected = tree.map_leaves(&mut |leaf| match leaf {
            Operand::Number(t) => Expr::number(used.iter().position(|&u| u == t.index()).unwrap() as u32 + 1),
            Operand::Constant(_) => Expr::Leaf(leaf.clone()),
        });
        assert_eq!(record.template, expected, "{equation}");
        let renormalized = normalize(&record.template, NormalizeConfig::ALL);
        assert_eq!(normalize(&renormalized, NormalizeConfig::ALL), renormalized);
    }
}

#[test]
fn grouping_keeps_every_problem() {
    let mut r = rng(3);
    let candidates: Vec<Candidate> = (0..200)
        .map(|i| Candidate {
            problem_id: format!("{:03}", r.random_range(0..40)),
            model: format!("m{}", i % 3),
            tokens: "n1".parse().unwrap(),
            log_prob: -r.random_range(0.0..5.0),
        })
        .collect();
    let groups = group_by_problem(candidates.clone());
    assert_eq!(groups.values().map(Vec::len).sum::<usize>(), candidates.len());
    assert!(groups.keys().collect::<Vec<_>>().windows(2).all(|w| w[0] < w[1]));
}
