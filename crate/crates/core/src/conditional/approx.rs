use std::collections::{BTreeMap, BTreeSet};

use super::{valid_within, Condition, ConditionalInstance, DEFAULT_WORK_LIMIT};
use crate::model::{Const, Term, Var};
use crate::query::{Formula, Query, Tuple};

struct Evaluator<'a> {
    ci: &'a ConditionalInstance,
    query_consts: BTreeSet<Const>,
    domain: Vec<Term>,
}

impl Evaluator<'_> {
    fn new<'a>(ci: &'a ConditionalInstance, q: &Query) -> Evaluator<'a> {
        let query_consts = q.constants();
        let mut domain = ci.terms();
        domain.extend(query_consts.iter().cloned().map(Term::Const));
        Evaluator {
            ci,
            query_consts,
            domain: domain.into_iter().collect(),
        }
    }

    /// Condition under which the value of `u` is in the evaluation domain.
    fn in_dom(&self, u: &Term) -> Condition {
        if u.as_const().is_some_and(|c| self.query_consts.contains(c)) {
            return Condition::True;
        }
        Condition::or(
            self.ci
                .iter()
                .filter(|cf| cf.fact.args.contains(u))
                .map(|cf| cf.cond.clone()),
        )
    }

    fn truth(&self, f: &Formula) -> Condition {
        match f {
            Formula::Atom(a) => Condition::or(
                self.ci
                    .iter()
                    .filter(|cf| cf.fact.relation == a.relation && cf.fact.arity() == a.arity())
                    .map(|cf| {
                        Condition::and(
                            std::iter::once(cf.cond.clone()).chain(
                                a.args.iter().zip(&cf.fact.args).map(|(t, u)| Condition::eq(t.clone(), u.clone())),
                            ),
                        )
                    }),
            ),
            Formula::Eq(a, b) => Condition::eq(a.clone(), b.clone()),
            Formula::And(fs) => Condition::and(fs.iter().map(|g| self.truth(g))),
            Formula::Or(fs) => Condition::or(fs.iter().map(|g| self.truth(g))),
            Formula::Not(g) => Condition::not(self.truth(g)),
            Formula::Exists(v, g) => Condition::or(
                self.domain
                    .iter()
                    .map(|u| Condition::and([self.in_dom(u), self.truth(&bind(g, v, u))])),
            ),
            Formula::Forall(v, g) => Condition::and(
                self.domain
                    .iter()
                    .map(|u| Condition::implies(self.in_dom(u), self.truth(&bind(g, v, u)))),
            ),
        }
    }
}

fn bind(f: &Formula, v: &Var, u: &Term) -> Formula {
    let sub: BTreeMap<Var, Term> = [(v.clone(), u.clone())].into_iter().collect();
    f.substitute(&sub)
}

/// Condition under which the closed formula `f` holds in a world of `ci`,
/// quantifiers ranging over the world's active domain and the constants of
/// `q`.
pub fn truth_condition(ci: &ConditionalInstance, q: &Query, f: &Formula) -> Condition {
    Evaluator::new(ci, q).truth(f)
}

pub fn conditional_certain_approx(ci: &ConditionalInstance, q: &Query) -> BTreeSet<Tuple> {
    conditional_certain_approx_within(ci, q, DEFAULT_WORK_LIMIT)
}

/// Tuples of constants of `ci` and `q` whose truth condition is valid.
/// A validity check that exceeds `work_limit` drops its tuple, so the
/// result never exceeds the exact certain answers.
pub fn conditional_certain_approx_within(ci: &ConditionalInstance, q: &Query, work_limit: usize) -> BTreeSet<Tuple> {
    let eval = Evaluator::new(ci, q);
    let consts: Vec<Term> = ci
        .constants()
        .union(&eval.query_consts)
        .cloned()
        .map(Term::Const)
        .collect();
    let mut out = BTreeSet::new();
    let mut tuple: Tuple = Vec::with_capacity(q.arity());
    candidates(&eval, q, &consts, &mut tuple, work_limit, &mut out);
    out
}

fn candidates(
    eval: &Evaluator<'_>,
    q: &Query,
    consts: &[Term],
    tuple: &mut Tuple,
    work_limit: usize,
    out: &mut BTreeSet<Tuple>,
) {
    if tuple.len() == q.arity() {
        let cond = Condition::and(
            tuple
                .iter()
                .map(|t| eval.in_dom(t))
                .chain(std::iter::once(eval.truth(&q.instantiate(tuple)))),
        );
        if valid_within(&cond, work_limit) == Some(true) {
            out.insert(tuple.clone());
        }
        return;
    }
    for c in consts {
        tuple.push(c.clone());
        candidates(eval, q, consts, tuple, work_limit, out);
        tuple.pop();
    }
}
