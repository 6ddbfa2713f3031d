use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{Const, NullId, Term};

/// A propositional combination of equalities between constants and nulls.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    True,
    False,
    Eq(Term, Term),
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Not(Box<Condition>),
    Implies(Box<Condition>, Box<Condition>),
}

impl Condition {
    /// `a = b` with nulls first and otherwise ascending operands; folds
    /// equalities between constants and identical terms.
    pub fn eq(a: Term, b: Term) -> Condition {
        debug_assert!(!a.is_var() && !b.is_var(), "conditions mention no variables");
        if a == b {
            return Condition::True;
        }
        if a.is_const() && b.is_const() {
            return Condition::False;
        }
        let swap = match (&a, &b) {
            (Term::Const(_), Term::Null(_)) => true,
            (Term::Null(_), Term::Const(_)) => false,
            _ => b < a,
        };
        if swap {
            Condition::Eq(b, a)
        } else {
            Condition::Eq(a, b)
        }
    }

    pub fn neq(a: Term, b: Term) -> Condition {
        Condition::not(Condition::eq(a, b))
    }

    /// Conjunction, flattened, without `True` parts and collapsing to
    /// `False` when any part is `False`.
    pub fn and(parts: impl IntoIterator<Item = Condition>) -> Condition {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Condition::True => {}
                Condition::False => return Condition::False,
                Condition::And(inner) => {
                    for c in inner {
                        if !out.contains(&c) {
                            out.push(c);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Condition::True,
            1 => out.pop().unwrap(),
            _ => Condition::And(out),
        }
    }

    /// Disjunction, dual to [`Condition::and`].
    pub fn or(parts: impl IntoIterator<Item = Condition>) -> Condition {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Condition::False => {}
                Condition::True => return Condition::True,
                Condition::Or(inner) => {
                    for c in inner {
                        if !out.contains(&c) {
                            out.push(c);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Condition::False,
            1 => out.pop().unwrap(),
            _ => Condition::Or(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Condition) -> Condition {
        match c {
            Condition::True => Condition::False,
            Condition::False => Condition::True,
            Condition::Not(inner) => *inner,
            other => Condition::Not(Box::new(other)),
        }
    }

    pub fn implies(a: Condition, b: Condition) -> Condition {
        match (&a, &b) {
            (Condition::False, _) | (_, Condition::True) => Condition::True,
            (Condition::True, _) => b,
            (_, Condition::False) => Condition::not(a),
            _ => Condition::Implies(Box::new(a), Box::new(b)),
        }
    }

    fn visit_terms<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        match self {
            Condition::True | Condition::False => {}
            Condition::Eq(a, b) => {
                f(a);
                f(b);
            }
            Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| c.visit_terms(f)),
            Condition::Not(c) => c.visit_terms(f),
            Condition::Implies(a, b) => {
                a.visit_terms(f);
                b.visit_terms(f);
            }
        }
    }

    pub fn nulls(&self) -> BTreeSet<NullId> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            if let Term::Null(n) = t {
                out.insert(*n);
            }
        });
        out
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

    /// The equalities of a conjunction of equalities, or `None` for any
    /// other shape. `True` is the empty conjunction.
    pub fn as_equalities(&self) -> Option<Vec<(&Term, &Term)>> {
        match self {
            Condition::True => Some(Vec::new()),
            Condition::Eq(a, b) => Some(vec![(a, b)]),
            Condition::And(cs) => cs
                .iter()
                .map(|c| match c {
                    Condition::Eq(a, b) => Some((a, b)),
                    _ => None,
                })
                .collect(),
            _ => None,
        }
    }

    /// Truth under a valuation; nulls missing from `nu` evaluate to
    /// themselves, so they only equal themselves.
    pub fn holds(&self, nu: &BTreeMap<NullId, Const>) -> bool {
        match self {
            Condition::True => true,
            Condition::False => false,
            Condition::Eq(a, b) => value(a, nu) == value(b, nu),
            Condition::And(cs) => cs.iter().all(|c| c.holds(nu)),
            Condition::Or(cs) => cs.iter().any(|c| c.holds(nu)),
            Condition::Not(c) => !c.holds(nu),
            Condition::Implies(a, b) => !a.holds(nu) || b.holds(nu),
        }
    }

    /// Substitutes assigned nulls and folds the result.
    pub fn assign(&self, nu: &BTreeMap<NullId, Const>) -> Condition {
        match self {
            Condition::True | Condition::False => self.clone(),
            Condition::Eq(a, b) => Condition::eq(value(a, nu), value(b, nu)),
            Condition::And(cs) => Condition::and(cs.iter().map(|c| c.assign(nu))),
            Condition::Or(cs) => Condition::or(cs.iter().map(|c| c.assign(nu))),
            Condition::Not(c) => Condition::not(c.assign(nu)),
            Condition::Implies(a, b) => Condition::implies(a.assign(nu), b.assign(nu)),
        }
    }
}

fn value(t: &Term, nu: &BTreeMap<NullId, Const>) -> Term {
    match t {
        Term::Null(n) => nu.get(n).map_or_else(|| t.clone(), |c| Term::Const(c.clone())),
        _ => t.clone(),
    }
}

/// Union-find closure of a set of equalities.
#[derive(Default)]
struct Closure {
    parent: BTreeMap<Term, Term>,
}

impl Closure {
    fn find(&mut self, t: &Term) -> Term {
        let mut root = t.clone();
        while let Some(p) = self.parent.get(&root) {
            root = p.clone();
        }
        let mut cur = t.clone();
        while let Some(p) = self.parent.get(&cur).cloned() {
            self.parent.insert(cur, root.clone());
            cur = p;
        }
        root
    }

    /// Merges the classes of `a` and `b`; false if that equates two
    /// distinct constants.
    fn union(&mut self, a: &Term, b: &Term) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        match (ra.is_const(), rb.is_const()) {
            (true, true) => false,
            // Constants stay class representatives.
            (true, false) => {
                self.parent.insert(rb, ra);
                true
            }
            _ => {
                self.parent.insert(ra, rb);
                true
            }
        }
    }

    fn of(eqs: &[(&Term, &Term)]) -> Option<Closure> {
        let mut c = Closure::default();
        eqs.iter().all(|(a, b)| c.union(a, b)).then_some(c)
    }
}

/// Assignments of `nulls` to `consts` or to fresh constants, where fresh
/// constant `k + 1` is used only after fresh constants `1..=k`. Covers every
/// equality pattern among the nulls and constants exactly once.
pub(crate) fn for_each_pattern(
    nulls: &[NullId],
    consts: &[Const],
    budget: &mut usize,
    visit: &mut dyn FnMut(&BTreeMap<NullId, Const>) -> bool,
) -> Option<bool> {
    let fresh = fresh_names(consts, nulls.len());
    let mut search = PatternSearch {
        nulls,
        consts,
        fresh: &fresh,
        nu: BTreeMap::new(),
        budget,
        visit,
    };
    search.go(0, 0)
}

struct PatternSearch<'a> {
    nulls: &'a [NullId],
    consts: &'a [Const],
    fresh: &'a [Const],
    nu: BTreeMap<NullId, Const>,
    budget: &'a mut usize,
    visit: &'a mut dyn FnMut(&BTreeMap<NullId, Const>) -> bool,
}

impl PatternSearch<'_> {
    /// Assigns null `i` onwards with `used` fresh constants taken so far;
    /// `Some(false)` stops the search, `None` means the budget ran out.
    fn go(&mut self, i: usize, used: usize) -> Option<bool> {
        if *self.budget == 0 {
            return None;
        }
        *self.budget -= 1;
        if i == self.nulls.len() {
            return Some((self.visit)(&self.nu));
        }
        let options = self.consts.len() + used.min(self.fresh.len() - 1) + 1;
        for k in 0..options {
            let (c, next) = if k < self.consts.len() {
                (&self.consts[k], used)
            } else {
                let f = k - self.consts.len();
                (&self.fresh[f], used.max(f + 1))
            };
            self.nu.insert(self.nulls[i], c.clone());
            if !self.go(i + 1, next)? {
                return Some(false);
            }
        }
        self.nu.remove(&self.nulls[i]);
        Some(true)
    }
}

/// `n` constant names outside `taken`.
pub(crate) fn fresh_names(taken: &[Const], n: usize) -> Vec<Const> {
    (1..)
        .map(|i| Const::new(format!("#{i}")))
        .filter(|c| !taken.contains(c))
        .take(n)
        .collect()
}

/// Work budget for the general entailment check, counted in search nodes.
pub const DEFAULT_WORK_LIMIT: usize = 2_000_000;

/// Whether every valuation satisfying `c` satisfies `d`, within a work
/// budget; `None` if the budget runs out.
pub fn entails_within(c: &Condition, d: &Condition, limit: usize) -> Option<bool> {
    if let (Some(ce), Some(de)) = (c.as_equalities(), d.as_equalities()) {
        let Some(mut closure) = Closure::of(&ce) else {
            return Some(true);
        };
        return Some(de.iter().all(|(a, b)| closure.find(a) == closure.find(b)));
    }
    if let (Some(ce), Condition::False) = (c.as_equalities(), d) {
        return Some(Closure::of(&ce).is_none());
    }
    let both = Condition::and([c.clone(), Condition::not(d.clone())]);
    let nulls: Vec<NullId> = both.nulls().into_iter().collect();
    let consts: Vec<Const> = both.constants().into_iter().collect();
    let mut budget = limit;
    // A counterexample satisfies `c` and falsifies `d`.
    for_each_pattern(&nulls, &consts, &mut budget, &mut |nu| !both.holds(nu))
}

pub fn condition_entails(c: &Condition, d: &Condition) -> bool {
    entails_within(c, d, usize::MAX).expect("unbounded search")
}

pub fn condition_consistent(c: &Condition) -> bool {
    !condition_entails(c, &Condition::False)
}

/// Validity within a work budget; `None` if the budget runs out.
pub fn valid_within(c: &Condition, limit: usize) -> Option<bool> {
    entails_within(&Condition::True, c, limit)
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn part(c: &Condition, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match c {
                Condition::And(_) | Condition::Or(_) | Condition::Implies(..) => write!(f, "({c})"),
                _ => write!(f, "{c}"),
            }
        }
        let list = |cs: &[Condition], sep: &str, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {sep} ")?;
                }
                part(c, f)?;
            }
            Ok(())
        };
        match self {
            Condition::True => write!(f, "true"),
            Condition::False => write!(f, "false"),
            Condition::Eq(a, b) => write!(f, "{a} = {b}"),
            Condition::And(cs) => list(cs, "&", f),
            Condition::Or(cs) => list(cs, "|", f),
            Condition::Not(c) => match &**c {
                Condition::Eq(a, b) => write!(f, "{a} != {b}"),
                other => {
                    write!(f, "!")?;
                    match other {
                        Condition::True | Condition::False | Condition::Not(_) => write!(f, "{other}"),
                        _ => write!(f, "({other})"),
                    }
                }
            },
            Condition::Implies(a, b) => {
                part(a, f)?;
                write!(f, " -> ")?;
                part(b, f)
            }
        }
    }
}

impl fmt::Debug for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u32) -> Term {
        Term::null(i)
    }

    fn c(s: &str) -> Term {
        Term::constant(s)
    }

    #[test]
    fn consistency() {
        let clash = Condition::and([Condition::eq(n(1), c("a")), Condition::eq(n(1), c("b"))]);
        assert!(!condition_consistent(&clash));
        let fine = Condition::and([Condition::eq(n(2), c("miami")), Condition::eq(n(1), c("a"))]);
        assert!(condition_consistent(&fine));
        assert!(condition_consistent(&Condition::True));
        // Not a conjunction, so decided by pattern search.
        let general = Condition::and([Condition::neq(n(1), c("a")), Condition::eq(n(1), n(2)), Condition::eq(n(2), c("a"))]);
        assert!(!condition_consistent(&general));
        assert!(condition_consistent(&Condition::or([clash, fine])));
    }

    #[test]
    fn entailment() {
        let e = Condition::eq(n(1), c("a"));
        assert!(condition_entails(&e, &e));
        assert!(!condition_entails(&Condition::True, &e));
        let chain = Condition::and([Condition::eq(n(1), c("a")), Condition::eq(n(2), n(1))]);
        assert!(condition_entails(&chain, &Condition::eq(n(2), c("a"))));
        // Excluded middle needs the general search.
        let either = Condition::or([e.clone(), Condition::neq(n(1), c("a"))]);
        assert!(condition_entails(&Condition::True, &either));
        assert_eq!(valid_within(&either, 1), None);
    }

    #[test]
    fn equalities_are_oriented() {
        assert_eq!(Condition::eq(c("b1"), n(1)), Condition::Eq(n(1), c("b1")));
        assert_eq!(Condition::eq(n(3), n(1)), Condition::Eq(n(1), n(3)));
        assert_eq!(Condition::eq(c("a"), c("b")), Condition::False);
        assert_eq!(Condition::eq(n(1), n(1)), Condition::True);
    }

    #[test]
    fn display() {
        let cond = Condition::and([
            Condition::eq(n(2), c("miami")),
            Condition::or([Condition::neq(n(1), c("a")), Condition::eq(n(1), n(2))]),
        ]);
        assert_eq!(cond.to_string(), "_2 = \"miami\" & (_1 != \"a\" | _1 = _2)");
    }

    #[test]
    fn patterns_cover_every_equality_type() {
        let mut seen = 0;
        let mut budget = usize::MAX;
        for_each_pattern(&[NullId(1), NullId(2)], &[Const::new("a")], &mut budget, &mut |_| {
            seen += 1;
            true
        });
        // Each null is a or fresh; two fresh nulls are equal or not.
        assert_eq!(seen, 5);
    }
}
