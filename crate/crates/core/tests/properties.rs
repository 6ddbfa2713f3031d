mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use dex_core::chase::{chase, ChaseResult};
use dex_core::conditional::{condition_entails, normalize_tgd, possible_worlds, conditional_chase, Condition};
use dex_core::enumerate::{enumerate_supported_solutions, BudgetPolicy, ConstantBudget};
use dex_core::model::{apply, is_classical_solution, is_supported_solution, Const, NullId, Term, Var};
use dex_core::syntax::{parse_setting, print_setting, SourceText};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_case, Case, Shape};

fn case_from(seed: u64, shape: Shape) -> Case {
    random_case(&mut ChaCha8Rng::seed_from_u64(seed), shape)
}

const WITH_EGDS: Shape = Shape {
    egds: true,
    t_tgds: true,
    max_fresh: 4,
};

const TGDS_ONLY: Shape = Shape {
    egds: false,
    t_tgds: true,
    max_fresh: 4,
};

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        (1u32..=3).prop_map(Term::null),
        prop::sample::select(vec!["a", "b"]).prop_map(Term::constant),
    ]
}

fn condition() -> impl Strategy<Value = Condition> {
    let leaf = prop_oneof![
        Just(Condition::True),
        (term(), term()).prop_map(|(a, b)| Condition::eq(a, b)),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..3).prop_map(Condition::and),
            prop::collection::vec(inner.clone(), 0..3).prop_map(Condition::or),
            inner.clone().prop_map(Condition::not),
            (inner.clone(), inner).prop_map(|(a, b)| Condition::implies(a, b)),
        ]
    })
}

/// Entailment by trying every valuation of the nulls into the constants
/// plus one distinct value per null.
fn entails_brute(c: &Condition, d: &Condition) -> bool {
    let nulls: Vec<NullId> = c.nulls().union(&d.nulls()).copied().collect();
    let mut values: Vec<Const> = ["a", "b"].into_iter().map(Const::new).collect();
    values.extend((0..nulls.len()).map(|i| Const::new(format!("other{i}"))));
    let mut idx = vec![0usize; nulls.len()];
    loop {
        let nu: BTreeMap<NullId, Const> = nulls.iter().copied().zip(idx.iter().map(|&i| values[i].clone())).collect();
        if c.holds(&nu) && !d.holds(&nu) {
            return false;
        }
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < values.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            return true;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn entailment_matches_brute_force(c in condition(), d in condition()) {
        prop_assert_eq!(condition_entails(&c, &d), entails_brute(&c, &d));
    }

    #[test]
    fn equality_conjunctions_use_closure(pairs in prop::collection::vec((term(), term()), 0..4), goal in (term(), term())) {
        let c = Condition::and(pairs.iter().map(|(a, b)| Condition::eq(a.clone(), b.clone())));
        let d = Condition::eq(goal.0, goal.1);
        prop_assert_eq!(condition_entails(&c, &d), entails_brute(&c, &d));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chase_result_is_a_solution(seed in any::<u64>()) {
        let case = case_from(seed, WITH_EGDS);
        if let ChaseResult::Success(j) = chase(&case.setting, &case.source).unwrap() {
            let nulls = j.nulls();
            let grounded = j.map_terms(|t| match t {
                Term::Null(n) => Term::constant(format!("null{}", n.0)),
                _ => t.clone(),
            });
            prop_assert!(is_classical_solution(&case.setting, &case.source, &grounded).unwrap(), "{} nulls\n{}", nulls.len(), case);
        }
    }

    #[test]
    fn enumerated_solutions_are_supported(seed in any::<u64>()) {
        let case = case_from(seed, WITH_EGDS);
        let b = ConstantBudget::default_for(&case.setting, &case.source, None).unwrap();
        for j in enumerate_supported_solutions(&case.setting, &case.source, &b, BudgetPolicy::Error).unwrap() {
            prop_assert!(is_supported_solution(&case.setting, &case.source, &j).unwrap(), "{}\n{:?}", case, j);
        }
    }

    #[test]
    fn normal_form_rebuilds_the_body(seed in any::<u64>()) {
        let case = case_from(seed, WITH_EGDS);
        for t in case.setting.all_tgds() {
            let n = normalize_tgd(t);
            let mut sub: BTreeMap<Var, Term> = BTreeMap::new();
            for (x, rhs) in n.eq_constraints.iter().rev() {
                match rhs {
                    Term::Var(later) => {
                        sub.insert(later.clone(), Term::Var(x.clone()));
                    }
                    _ => {
                        sub.insert(x.clone(), rhs.clone());
                    }
                }
            }
            let rebuilt: Vec<_> = n.linear_body.iter().map(|a| apply(a, &sub)).collect();
            prop_assert_eq!(&rebuilt, &t.body);
            let linear_vars: Vec<&Var> = n.linear_body.iter().flat_map(|a| a.vars()).collect();
            let distinct: BTreeSet<&Var> = linear_vars.iter().copied().collect();
            prop_assert_eq!(linear_vars.len(), distinct.len());
        }
    }

    #[test]
    fn supported_solutions_are_possible_worlds(seed in any::<u64>()) {
        let case = case_from(seed, TGDS_ONLY);
        let ci = conditional_chase(&case.setting, &case.source).unwrap();
        let b = ConstantBudget::default_for(&case.setting, &case.source, None).unwrap();
        let extra: BTreeSet<Const> = b.all().cloned().collect();
        let worlds = possible_worlds(&ci, &extra, 0);
        for j in enumerate_supported_solutions(&case.setting, &case.source, &b, BudgetPolicy::Error).unwrap() {
            prop_assert!(worlds.contains(&j), "{}\n{:?}", case, j);
        }
    }

    #[test]
    fn printed_settings_parse_back(seed in any::<u64>()) {
        let case = case_from(seed, WITH_EGDS);
        let printed = print_setting(&case.setting);
        let reparsed = parse_setting(&SourceText::from(printed.as_str())).unwrap();
        prop_assert_eq!(reparsed, case.setting);
    }
}
