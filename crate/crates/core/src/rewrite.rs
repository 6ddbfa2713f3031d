//! Folding target EGDs into a query, so that the EGD-free conditional chase
//! gives sound answers for settings with EGDs.

use std::collections::BTreeSet;

use crate::conditional::{conditional_certain_approx, conditional_chase_with, CondError, ConditionalChaseConfig};
use crate::enumerate::{exists_supported_solution, EnumError};
use crate::model::{Atom, Const, Egd, Instance, Schema, Setting, Term, Var};
use crate::query::{CertainAnswers, Formula, Query};

/// `Q1 ∨ Q2` with `Q1 = Q ∧ (every EGD holds)` and
/// `Q2 = dom ∧ (some EGD fails)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewrittenQuery {
    pub q1: Query,
    pub q2: Query,
    pub combined: Query,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error(transparent)]
    Enum(#[from] EnumError),
    #[error(transparent)]
    Conditional(#[from] CondError),
}

fn egd_formula(e: &Egd) -> Formula {
    let vars: BTreeSet<Var> = e.body.iter().flat_map(|a| a.vars().cloned()).collect();
    let body = Formula::and(e.body.iter().cloned().map(Formula::atom).collect());
    Formula::forall_many(
        vars,
        Formula::implies(body, Formula::eq(Term::Var(e.lhs.clone()), Term::Var(e.rhs.clone()))),
    )
}

/// The Boolean query true exactly on instances that satisfy `e`.
pub fn egd_holds_query(e: &Egd) -> Query {
    Query::new(format!("Holds_{}", e.id), Vec::new(), egd_formula(e)).expect("closed formula")
}

/// `v` occurs in some position of `schema` or equals a constant of `extra`.
fn in_dom(v: &Var, schema: &Schema, extra: &BTreeSet<Const>) -> Formula {
    let mut parts = Vec::new();
    for (rel, arity) in schema.iter() {
        for i in 0..arity {
            let others: Vec<Var> = (0..arity)
                .filter(|&j| j != i)
                .map(|j| {
                    let mut name = format!("w{}", j + 1);
                    while name == v.name() {
                        name.push('\'');
                    }
                    Var::new(name)
                })
                .collect();
            let mut rest = others.iter();
            let args = (0..arity)
                .map(|j| if j == i { Term::Var(v.clone()) } else { Term::Var(rest.next().unwrap().clone()) })
                .collect();
            parts.push(Formula::exists_many(others, Formula::atom(Atom::new(rel, args))));
        }
    }
    parts.extend(extra.iter().map(|c| Formula::eq(Term::Var(v.clone()), Term::Const(c.clone()))));
    Formula::or(parts)
}

/// `f` with every quantifier restricted to the active domain and `extra`.
fn relativize(f: &Formula, schema: &Schema, extra: &BTreeSet<Const>) -> Formula {
    match f {
        Formula::Atom(_) | Formula::Eq(..) => f.clone(),
        Formula::And(fs) => Formula::and(fs.iter().map(|g| relativize(g, schema, extra)).collect()),
        Formula::Or(fs) => Formula::or(fs.iter().map(|g| relativize(g, schema, extra)).collect()),
        Formula::Not(g) => Formula::not(relativize(g, schema, extra)),
        Formula::Exists(v, g) => Formula::exists(
            v.clone(),
            Formula::and(vec![in_dom(v, schema, extra), relativize(g, schema, extra)]),
        ),
        Formula::Forall(v, g) => Formula::forall(
            v.clone(),
            Formula::implies(in_dom(v, schema, extra), relativize(g, schema, extra)),
        ),
    }
}

/// The arity-`k` query returning every tuple over the active domain of the
/// `schema` facts and `extra`.
pub fn dom_query(k: usize, extra: &BTreeSet<Const>, schema: &Schema) -> Query {
    let head: Vec<Var> = (1..=k).map(|i| Var::new(format!("x{i}"))).collect();
    let formula = Formula::and(head.iter().map(|v| in_dom(v, schema, extra)).collect());
    Query::new("Dom", head, formula).expect("head variables are free")
}

/// Rewrites `q` over `schema` so that it agrees with `q` on instances
/// satisfying `egds` and returns every tuple over the active domain and
/// `extra` otherwise.
pub fn rewrite_with_egds(q: &Query, egds: &[Egd], schema: &Schema, extra: &BTreeSet<Const>) -> RewrittenQuery {
    let holds: Vec<Formula> = egds.iter().map(egd_formula).collect();
    let fails = Formula::or(holds.iter().cloned().map(Formula::not).collect());
    let dom = Formula::and(q.head.iter().map(|v| in_dom(v, schema, extra)).collect());
    let egd_consts: BTreeSet<Const> = egds.iter().flat_map(Egd::constants).collect();
    let original = if egd_consts.is_subset(&q.constants()) {
        q.formula.clone()
    } else {
        // EGD constants would widen the range of the query's variables.
        let own = q.constants();
        Formula::and(vec![
            Formula::and(q.head.iter().map(|v| in_dom(v, schema, &own)).collect()),
            relativize(&q.formula, schema, &own),
        ])
    };
    let q1 = Formula::and(std::iter::once(original).chain(holds).collect());
    let q2 = Formula::and(vec![dom, fails]);
    let make = |suffix: &str, f: Formula| Query::new(format!("{}{suffix}", q.name), q.head.clone(), f).expect("same free variables");
    RewrittenQuery {
        combined: make("", Formula::or(vec![q1.clone(), q2.clone()])),
        q1: make("_1", q1),
        q2: make("_2", q2),
    }
}

/// Certain answers of `q` under-approximated through the conditional chase
/// of the setting without its EGDs and the rewritten query.
pub fn approx_answers_with_egds(setting: &Setting, source: &Instance, q: &Query) -> Result<CertainAnswers, RewriteError> {
    approx_answers_with_egds_with(setting, source, q, &ConditionalChaseConfig::default())
}

pub fn approx_answers_with_egds_with(
    setting: &Setting,
    source: &Instance,
    q: &Query,
    config: &ConditionalChaseConfig,
) -> Result<CertainAnswers, RewriteError> {
    if !exists_supported_solution(setting, source)? {
        return Ok(CertainAnswers::NoSolutions);
    }
    let ci = conditional_chase_with(&setting.without_egds(), source, config)?.result;
    let egds: Vec<Egd> = setting.egds().cloned().collect();
    let rewritten = rewrite_with_egds(q, &egds, &setting.target, &q.constants());
    Ok(CertainAnswers::Tuples(conditional_certain_approx(&ci, &rewritten.combined)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::evaluate;
    use crate::syntax::{parse_instance, parse_query, parse_setting, SourceText};

    const EMPLOYEES: &str = r#"
source Emp/1, KnownC/2.
target EmpC/2, SameC/2.
st: Emp(x) -> exists z. EmpC(x,z).
st: KnownC(x,y) -> EmpC(x,y).
t: EmpC(x,y), EmpC(x',y) -> SameC(x,x').
t: EmpC(x,y), EmpC(x,z) -> y = z.
"#;

    fn setting() -> Setting {
        parse_setting(&SourceText::from(EMPLOYEES)).unwrap()
    }

    fn target(s: &Setting, text: &str) -> Instance {
        parse_instance(&SourceText::from(text), &s.target).unwrap()
    }

    #[test]
    fn egd_query_detects_violations() {
        let s = setting();
        let q = egd_holds_query(s.egds().next().unwrap());
        let holds = |text: &str| !evaluate(&q, &target(&s, text)).is_empty();
        assert!(!holds(r#"EmpC("j","m"). EmpC("j","c")."#));
        assert!(holds(r#"EmpC("j","m")."#));
        assert!(holds(""));
    }

    #[test]
    fn dom_query_examples() {
        let schema = Schema::from_pairs([("R", 2)]);
        let extra: BTreeSet<Const> = [Const::new("c")].into_iter().collect();
        let j: Instance = [Atom::new("R", vec![Term::constant("a"), Term::constant("b")])].into_iter().collect();
        let unary = evaluate(&dom_query(1, &extra, &schema), &j);
        assert_eq!(unary.len(), 3);
        let pairs = evaluate(&dom_query(2, &extra, &schema), &Instance::new());
        assert_eq!(pairs, [vec![Term::constant("c"), Term::constant("c")]].into_iter().collect());
        assert_eq!(evaluate(&dom_query(0, &extra, &schema), &Instance::new()).len(), 1);
    }

    #[test]
    fn rewriting_case_split() {
        let s = setting();
        let q = parse_query(&SourceText::from("Q(x) := exists y. EmpC(x,y) & !SameC(x,x)."), &s.target).unwrap();
        let egds: Vec<Egd> = s.egds().cloned().collect();
        let r = rewrite_with_egds(&q, &egds, &s.target, &q.constants());
        let good = target(&s, r#"EmpC("j","m"). EmpC("k","m"). SameC("k","k")."#);
        assert_eq!(evaluate(&r.combined, &good), evaluate(&q, &good));
        let bad = target(&s, r#"EmpC("j","m"). EmpC("j","c")."#);
        assert_eq!(evaluate(&r.combined, &bad).len(), 3);
        let none = rewrite_with_egds(&q, &[], &s.target, &q.constants());
        assert_eq!(evaluate(&none.combined, &good), evaluate(&q, &good));
    }

    #[test]
    fn employees_end_to_end() {
        let s = setting();
        let i = parse_instance(&SourceText::from(r#"Emp("john"). Emp("mary"). KnownC("john","miami")."#), &s.source).unwrap();
        let q = parse_query(
            &SourceText::from("Q(x,y) := exists u, v. EmpC(x,u) & EmpC(y,v) & u != v."),
            &s.target,
        )
        .unwrap();
        assert_eq!(approx_answers_with_egds(&s, &i, &q).unwrap(), CertainAnswers::Tuples(BTreeSet::new()));
        let known = parse_query(&SourceText::from("Q(x) := exists y. EmpC(x,y)."), &s.target).unwrap();
        let expected: BTreeSet<Vec<Term>> =
            [vec![Term::constant("john")], vec![Term::constant("mary")]].into_iter().collect();
        assert_eq!(approx_answers_with_egds(&s, &i, &known).unwrap(), CertainAnswers::Tuples(expected));
    }
}
