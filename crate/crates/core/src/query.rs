//! First-order queries and their evaluation under active-domain semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{Atom, Const, Instance, Term, Var};

pub type Tuple = Vec<Term>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Atom),
    Eq(Term, Term),
    /// Conjunction; the empty conjunction is `true`.
    And(Vec<Formula>),
    /// Disjunction; the empty disjunction is `false`.
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Exists(Var, Box<Formula>),
    Forall(Var, Box<Formula>),
}

impl Formula {
    pub fn truth() -> Formula {
        Formula::And(Vec::new())
    }

    pub fn falsity() -> Formula {
        Formula::Or(Vec::new())
    }

    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }

    pub fn eq(a: impl Into<Term>, b: impl Into<Term>) -> Formula {
        Formula::Eq(a.into(), b.into())
    }

    /// Conjunction that collapses a single operand to itself.
    pub fn and(mut parts: Vec<Formula>) -> Formula {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::And(parts)
        }
    }

    /// Disjunction that collapses a single operand to itself.
    pub fn or(mut parts: Vec<Formula>) -> Formula {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Formula::Or(parts)
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn exists(v: impl Into<Var>, f: Formula) -> Formula {
        Formula::Exists(v.into(), Box::new(f))
    }

    pub fn forall(v: impl Into<Var>, f: Formula) -> Formula {
        Formula::Forall(v.into(), Box::new(f))
    }

    /// `exists v1. ... exists vn. f`
    pub fn exists_many(vars: impl IntoIterator<Item = Var>, f: Formula) -> Formula {
        let vars: Vec<Var> = vars.into_iter().collect();
        vars.into_iter().rev().fold(f, |acc, v| Formula::exists(v, acc))
    }

    /// `forall v1. ... forall vn. f`
    pub fn forall_many(vars: impl IntoIterator<Item = Var>, f: Formula) -> Formula {
        let vars: Vec<Var> = vars.into_iter().collect();
        vars.into_iter().rev().fold(f, |acc, v| Formula::forall(v, acc))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(vec![Formula::not(a), b])
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
        let mut term = |t: &Term, bound: &Vec<Var>| {
            if let Term::Var(v) = t {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
        };
        match self {
            Formula::Atom(a) => a.args.iter().for_each(|t| term(t, bound)),
            Formula::Eq(a, b) => {
                term(a, bound);
                term(b, bound);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            if let Term::Const(c) = t {
                out.insert(c.clone());
            }
        });
        out
    }

    pub fn relations(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            out.insert(&*a.relation);
        });
        out
    }

    pub fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            Formula::Atom(a) => f(a),
            Formula::Eq(..) => {}
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| g.visit_atoms(f)),
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => g.visit_atoms(f),
        }
    }

    fn visit_terms(&self, f: &mut impl FnMut(&Term)) {
        match self {
            Formula::Atom(a) => a.args.iter().for_each(&mut *f),
            Formula::Eq(a, b) => {
                f(a);
                f(b);
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| g.visit_terms(f)),
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => g.visit_terms(f),
        }
    }

    /// Replaces free occurrences of variables according to `sub`.
    pub fn substitute(&self, sub: &BTreeMap<Var, Term>) -> Formula {
        let term = |t: &Term| match t {
            Term::Var(v) => sub.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        };
        match self {
            Formula::Atom(a) => Formula::Atom(a.map_terms(term)),
            Formula::Eq(a, b) => Formula::Eq(term(a), term(b)),
            Formula::And(fs) => Formula::And(fs.iter().map(|g| g.substitute(sub)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|g| g.substitute(sub)).collect()),
            Formula::Not(g) => Formula::not(g.substitute(sub)),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                let inner = if sub.contains_key(v) {
                    let mut shadowed = sub.clone();
                    shadowed.remove(v);
                    g.substitute(&shadowed)
                } else {
                    g.substitute(sub)
                };
                match self {
                    Formula::Exists(..) => Formula::exists(v.clone(), inner),
                    _ => Formula::forall(v.clone(), inner),
                }
            }
        }
    }

    /// Built from atoms, conjunction, disjunction and existential
    /// quantification only.
    pub fn is_positive(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(Formula::is_positive),
            Formula::Exists(_, f) => f.is_positive(),
            Formula::Eq(..) | Formula::Not(_) | Formula::Forall(..) => false,
        }
    }
}

/// A query `Q(x1..xk) := formula` whose free variables are exactly the head.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Query {
    pub name: String,
    pub head: Vec<Var>,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("head variable {0} is listed twice")]
    DuplicateHeadVar(String),
    #[error("free variables {free:?} do not match the head {head:?}")]
    HeadMismatch { free: Vec<String>, head: Vec<String> },
}

impl Query {
    pub fn new(name: impl Into<String>, head: Vec<Var>, formula: Formula) -> Result<Query, QueryError> {
        let mut seen = BTreeSet::new();
        for v in &head {
            if !seen.insert(v.clone()) {
                return Err(QueryError::DuplicateHeadVar(v.to_string()));
            }
        }
        let free = formula.free_vars();
        if free != seen {
            return Err(QueryError::HeadMismatch {
                free: free.iter().map(ToString::to_string).collect(),
                head: head.iter().map(ToString::to_string).collect(),
            });
        }
        Ok(Query {
            name: name.into(),
            head,
            formula,
        })
    }

    pub fn arity(&self) -> usize {
        self.head.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.formula.is_positive()
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        self.formula.constants()
    }

    /// The formula with the head variables bound to `tuple`.
    pub fn instantiate(&self, tuple: &[Term]) -> Formula {
        let sub = self.head.iter().cloned().zip(tuple.iter().cloned()).collect();
        self.formula.substitute(&sub)
    }
}

/// The evaluation domain: the active domain of `inst` plus the constants of
/// the query.
pub fn domain(q: &Query, inst: &Instance) -> BTreeSet<Term> {
    let mut dom = inst.adom();
    dom.extend(q.constants().into_iter().map(Term::Const));
    dom
}

/// All head tuples over the evaluation domain that satisfy the query.
pub fn evaluate(q: &Query, inst: &Instance) -> BTreeSet<Tuple> {
    let dom: Vec<Term> = domain(q, inst).into_iter().collect();
    let mut out = BTreeSet::new();
    let mut env = BTreeMap::new();
    let mut tuple = Vec::with_capacity(q.arity());
    enumerate(q, inst, &dom, &mut env, &mut tuple, &mut out);
    out
}

fn enumerate(
    q: &Query,
    inst: &Instance,
    dom: &[Term],
    env: &mut BTreeMap<Var, Term>,
    tuple: &mut Tuple,
    out: &mut BTreeSet<Tuple>,
) {
    let i = tuple.len();
    if i == q.arity() {
        if holds(&q.formula, inst, dom, env) {
            out.insert(tuple.clone());
        }
        return;
    }
    for d in dom {
        env.insert(q.head[i].clone(), d.clone());
        tuple.push(d.clone());
        enumerate(q, inst, dom, env, tuple, out);
        tuple.pop();
    }
    env.remove(&q.head[i]);
}

/// True iff `inst` satisfies `f` under `env`, quantifiers ranging over `dom`.
pub fn holds(f: &Formula, inst: &Instance, dom: &[Term], env: &mut BTreeMap<Var, Term>) -> bool {
    let resolve = |t: &Term, env: &BTreeMap<Var, Term>| match t {
        Term::Var(v) => env.get(v).cloned().unwrap_or_else(|| panic!("unbound variable {v}")),
        _ => t.clone(),
    };
    match f {
        Formula::Atom(a) => inst.contains(&a.map_terms(|t| resolve(t, env))),
        Formula::Eq(a, b) => resolve(a, env) == resolve(b, env),
        Formula::And(fs) => fs.iter().all(|g| holds(g, inst, dom, env)),
        Formula::Or(fs) => fs.iter().any(|g| holds(g, inst, dom, env)),
        Formula::Not(g) => !holds(g, inst, dom, env),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let existential = matches!(f, Formula::Exists(..));
            let saved = env.remove(v);
            let mut result = !existential;
            for d in dom {
                env.insert(v.clone(), d.clone());
                if holds(g, inst, dom, env) == existential {
                    result = existential;
                    break;
                }
            }
            env.remove(v);
            if let Some(old) = saved {
                env.insert(v.clone(), old);
            }
            result
        }
    }
}

/// Keeps only the tuples made of constants.
pub fn drop_null_tuples(answers: &BTreeSet<Tuple>) -> BTreeSet<Tuple> {
    answers
        .iter()
        .filter(|t| t.iter().all(Term::is_const))
        .cloned()
        .collect()
}

/// Result of a certain-answer computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertainAnswers {
    Tuples(BTreeSet<Tuple>),
    /// The intersection ranged over no solutions at all.
    NoSolutions,
}

impl CertainAnswers {
    pub fn tuples(&self) -> Option<&BTreeSet<Tuple>> {
        match self {
            CertainAnswers::Tuples(t) => Some(t),
            CertainAnswers::NoSolutions => None,
        }
    }

    /// Intersection of answer sets; `None` input yields `NoSolutions`.
    pub fn intersect_all(sets: impl IntoIterator<Item = BTreeSet<Tuple>>) -> CertainAnswers {
        let mut acc: Option<BTreeSet<Tuple>> = None;
        for s in sets {
            acc = Some(match acc {
                None => s,
                Some(a) => a.intersection(&s).cloned().collect(),
            });
        }
        acc.map_or(CertainAnswers::NoSolutions, CertainAnswers::Tuples)
    }
}

// Printing uses the query syntax of the `.query` format.

fn write_operand(f: &mut fmt::Formatter<'_>, g: &Formula) -> fmt::Result {
    match g {
        Formula::And(fs) | Formula::Or(fs) if fs.len() >= 2 => write!(f, "({g})"),
        Formula::Exists(..) | Formula::Forall(..) => write!(f, "({g})"),
        _ => write!(f, "{g}"),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::And(fs) if fs.is_empty() => f.write_str("true"),
            Formula::Or(fs) if fs.is_empty() => f.write_str("false"),
            Formula::And(fs) | Formula::Or(fs) => {
                let sep = if matches!(self, Formula::And(_)) { " & " } else { " | " };
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write_operand(f, g)?;
                }
                Ok(())
            }
            Formula::Not(g) => match &**g {
                Formula::Eq(a, b) => write!(f, "{a} != {b}"),
                Formula::Atom(_) | Formula::Not(_) => write!(f, "!{g}"),
                Formula::And(fs) | Formula::Or(fs) if fs.is_empty() => write!(f, "!{g}"),
                _ => write!(f, "!({g})"),
            },
            Formula::Exists(v, g) => write!(f, "exists {v}. {g}"),
            Formula::Forall(v, g) => write!(f, "forall {v}. {g}"),
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, v) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ") := {}.", self.formula)
    }
}

impl fmt::Debug for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
