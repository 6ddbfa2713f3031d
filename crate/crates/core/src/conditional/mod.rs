//! Conditional instances, the conditional chase for TGD-only settings, and
//! conditional certain answers.

mod approx;
mod condition;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{
    apply, find_homomorphisms, Atom, Const, Homomorphism, Instance, ModelError, NullGen, NullId, Schema, Setting,
    Term, Tgd, Var,
};
use crate::query::{evaluate, Query, Tuple};

pub use approx::{conditional_certain_approx, conditional_certain_approx_within, truth_condition};
pub use condition::{
    condition_consistent, condition_entails, entails_within, valid_within, Condition, DEFAULT_WORK_LIMIT,
};
pub(crate) use condition::{for_each_pattern, fresh_names};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionalFact {
    pub fact: Atom,
    pub cond: Condition,
}

impl ConditionalFact {
    pub fn new(fact: Atom, cond: Condition) -> Self {
        ConditionalFact { fact, cond }
    }
}

impl fmt::Display for ConditionalFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :: {}", self.fact, self.cond)
    }
}

impl fmt::Debug for ConditionalFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConditionalInstance {
    cfacts: BTreeSet<ConditionalFact>,
}

impl ConditionalInstance {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every fact of `inst` under the condition `true`.
    pub fn certain(inst: &Instance) -> Self {
        inst.iter()
            .map(|f| ConditionalFact::new(f.clone(), Condition::True))
            .collect()
    }

    pub fn insert(&mut self, cf: ConditionalFact) -> bool {
        self.cfacts.insert(cf)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConditionalFact> {
        self.cfacts.iter()
    }

    pub fn len(&self) -> usize {
        self.cfacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cfacts.is_empty()
    }

    /// The underlying facts, conditions dropped.
    pub fn facts(&self) -> Instance {
        self.cfacts.iter().map(|cf| cf.fact.clone()).collect()
    }

    pub fn conditions_of<'a>(&'a self, fact: &'a Atom) -> impl Iterator<Item = &'a Condition> + 'a {
        self.cfacts.iter().filter(move |cf| &cf.fact == fact).map(|cf| &cf.cond)
    }

    pub fn nulls(&self) -> BTreeSet<NullId> {
        let mut out: BTreeSet<NullId> = self.facts().nulls();
        for cf in &self.cfacts {
            out.extend(cf.cond.nulls());
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        let mut out = self.facts().constants();
        for cf in &self.cfacts {
            out.extend(cf.cond.constants());
        }
        out
    }

    /// Constants and nulls of the facts.
    pub fn terms(&self) -> BTreeSet<Term> {
        self.cfacts.iter().flat_map(|cf| cf.fact.args.iter().cloned()).collect()
    }

    pub fn restrict(&self, schema: &Schema) -> Self {
        self.cfacts
            .iter()
            .filter(|cf| schema.contains(&cf.fact.relation))
            .cloned()
            .collect()
    }

    /// Renames nulls to `_1, _2, ...` in order of first appearance in the
    /// sorted facts, for comparisons up to null renaming.
    pub fn canonical_nulls(&self) -> Self {
        let mut names: BTreeMap<NullId, NullId> = BTreeMap::new();
        let mut facts: Vec<&ConditionalFact> = self.cfacts.iter().collect();
        facts.sort_by(|a, b| (&a.fact.relation, a.fact.args.iter().filter(|t| !t.is_null()).collect::<Vec<_>>())
            .cmp(&(&b.fact.relation, b.fact.args.iter().filter(|t| !t.is_null()).collect::<Vec<_>>())));
        for cf in facts {
            for n in cf.fact.args.iter().filter_map(|t| match t {
                Term::Null(n) => Some(*n),
                _ => None,
            }) {
                let next = NullId(names.len() as u32 + 1);
                names.entry(n).or_insert(next);
            }
        }
        let rename = |t: &Term| match t {
            Term::Null(n) => Term::Null(names.get(n).copied().unwrap_or(*n)),
            _ => t.clone(),
        };
        self.cfacts
            .iter()
            .map(|cf| ConditionalFact::new(cf.fact.map_terms(rename), rename_condition(&cf.cond, &rename)))
            .collect()
    }

    /// One `fact :: condition` line per conditional fact.
    pub fn to_text(&self) -> String {
        self.cfacts.iter().map(|cf| format!("{cf}\n")).collect()
    }
}

fn rename_condition(c: &Condition, rename: &dyn Fn(&Term) -> Term) -> Condition {
    match c {
        Condition::True | Condition::False => c.clone(),
        Condition::Eq(a, b) => Condition::eq(rename(a), rename(b)),
        Condition::And(cs) => Condition::and(cs.iter().map(|x| rename_condition(x, rename))),
        Condition::Or(cs) => Condition::or(cs.iter().map(|x| rename_condition(x, rename))),
        Condition::Not(x) => Condition::not(rename_condition(x, rename)),
        Condition::Implies(a, b) => Condition::implies(rename_condition(a, rename), rename_condition(b, rename)),
    }
}

impl FromIterator<ConditionalFact> for ConditionalInstance {
    fn from_iter<T: IntoIterator<Item = ConditionalFact>>(iter: T) -> Self {
        ConditionalInstance {
            cfacts: iter.into_iter().collect(),
        }
    }
}

/// A tuple that exists in the worlds satisfying `cond`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionalTuple {
    pub tuple: Vec<Term>,
    pub cond: Condition,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CondError {
    #[error("tuples of lengths {0} and {1} cannot be compared")]
    LengthMismatch(usize, usize),
    #[error("the conditional chase needs a setting without EGDs")]
    HasEgds,
    #[error("conditional chase exceeded the step cap of {0} steps; the setting is probably not weakly acyclic")]
    StepCapExceeded(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn tuples_equal(t: &[Term], u: &[Term]) -> Condition {
    Condition::and(t.iter().zip(u).map(|(a, b)| Condition::eq(a.clone(), b.clone())))
}

/// `t1 ⊑ t2`: wherever `t1` exists, `t2` exists and equals it.
pub fn cond_subsumes(t1: &ConditionalTuple, t2: &ConditionalTuple) -> Result<bool, CondError> {
    if t1.tuple.len() != t2.tuple.len() {
        return Err(CondError::LengthMismatch(t1.tuple.len(), t2.tuple.len()));
    }
    Ok(condition_entails(&t1.cond, &t2.cond) && condition_entails(&t1.cond, &tuples_equal(&t1.tuple, &t2.tuple)))
}

/// A TGD whose body atoms hold distinct variables only; joins and body
/// constants become equalities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalTgd {
    pub id: String,
    pub linear_body: Vec<Atom>,
    /// `(x, t)` stands for `x = t`.
    pub eq_constraints: Vec<(Var, Term)>,
    pub head: Vec<Atom>,
    pub frontier: Vec<Var>,
    pub existentials: Vec<Var>,
}

impl fmt::Display for NormalTgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut body: Vec<String> = self.linear_body.iter().map(ToString::to_string).collect();
        body.extend(self.eq_constraints.iter().map(|(x, t)| format!("{x}={t}")));
        let head: Vec<String> = self.head.iter().map(ToString::to_string).collect();
        write!(f, "{} -> ", body.join(", "))?;
        if !self.existentials.is_empty() {
            let zs: Vec<&str> = self.existentials.iter().map(Var::name).collect();
            write!(f, "exists {}. ", zs.join(","))?;
        }
        write!(f, "{}", head.join(", "))
    }
}

/// Normal form of `t`: the first occurrence of a variable keeps its name,
/// later ones get primed names joined to it by an equality, and each body
/// constant is replaced by a fresh variable equal to it.
pub fn normalize_tgd(t: &Tgd) -> NormalTgd {
    let mut taken: BTreeSet<Var> = t.body_vars();
    taken.extend(t.existentials.iter().cloned());
    let mut seen: BTreeSet<Var> = BTreeSet::new();
    let mut eqs = Vec::new();
    let fresh = |base: &str, taken: &mut BTreeSet<Var>| {
        let mut name = format!("{base}'");
        while taken.contains(&Var::new(&name)) {
            name.push('\'');
        }
        let v = Var::new(name);
        taken.insert(v.clone());
        v
    };
    let linear_body = t
        .body
        .iter()
        .map(|a| {
            a.map_terms(|term| match term {
                Term::Var(v) if seen.insert(v.clone()) => term.clone(),
                Term::Var(v) => {
                    let w = fresh(v.name(), &mut taken);
                    eqs.push((v.clone(), Term::Var(w.clone())));
                    Term::Var(w)
                }
                _ => {
                    let w = fresh("v", &mut taken);
                    eqs.push((w.clone(), term.clone()));
                    Term::Var(w)
                }
            })
        })
        .collect();
    NormalTgd {
        id: t.id.clone(),
        linear_body,
        eq_constraints: eqs,
        head: t.head.clone(),
        frontier: t.frontier.clone(),
        existentials: t.existentials.clone(),
    }
}

/// Conditions under which `h` triggers `rho`: `h(η)` conjoined with one
/// condition of each body fact, for every way of picking them.
pub fn cond_set(rho: &NormalTgd, h: &Homomorphism, ci: &ConditionalInstance) -> Vec<Condition> {
    let image = |t: &Term| match t {
        Term::Var(v) => h[v].clone(),
        _ => t.clone(),
    };
    let eta = Condition::and(
        rho.eq_constraints
            .iter()
            .map(|(x, t)| Condition::eq(h[x].clone(), image(t))),
    );
    let mut out = vec![eta];
    for a in &rho.linear_body {
        let fact = apply(a, h);
        let conds: Vec<&Condition> = ci.conditions_of(&fact).collect();
        out = out
            .iter()
            .flat_map(|prefix| conds.iter().map(move |c| Condition::and([prefix.clone(), (*c).clone()])))
            .collect();
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Debug)]
pub struct ConditionalChaseConfig {
    pub step_cap: usize,
    pub trace: bool,
}

pub const DEFAULT_CONDITIONAL_STEP_CAP: usize = 100_000;

impl Default for ConditionalChaseConfig {
    fn default() -> Self {
        ConditionalChaseConfig {
            step_cap: DEFAULT_CONDITIONAL_STEP_CAP,
            trace: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConditionalChaseRun {
    /// The maximal sequence's result, restricted to the target schema.
    pub result: ConditionalInstance,
    pub steps: usize,
    /// One `step <tgd> (<frontier>) :: <condition>` line per step.
    pub trace: Vec<String>,
}

pub fn conditional_chase(setting: &Setting, source: &Instance) -> Result<ConditionalInstance, CondError> {
    Ok(conditional_chase_with(setting, source, &ConditionalChaseConfig::default())?.result)
}

/// Runs conditional chase steps until none applies. Triggers are taken in
/// TGD order, then homomorphism order; a step is skipped when its frontier
/// tuple and condition are subsumed by an earlier step of the same TGD.
pub fn conditional_chase_with(
    setting: &Setting,
    source: &Instance,
    config: &ConditionalChaseConfig,
) -> Result<ConditionalChaseRun, CondError> {
    if !setting.is_tgd_only() {
        return Err(CondError::HasEgds);
    }
    source.check_schema(&setting.source)?;
    if let Some(f) = source.iter().find(|f| f.has_null()) {
        return Err(ModelError::NullInSource(f.to_string()).into());
    }
    let tgds: Vec<NormalTgd> = setting.all_tgds().map(normalize_tgd).collect();
    let mut ci = ConditionalInstance::certain(source);
    let mut history: Vec<Vec<ConditionalTuple>> = vec![Vec::new(); tgds.len()];
    let nulls = NullGen::new();
    let mut steps = 0;
    let mut trace = Vec::new();
    loop {
        let snapshot = ci.clone();
        let facts = snapshot.facts();
        let mut applied = false;
        for (i, rho) in tgds.iter().enumerate() {
            let mut homs = find_homomorphisms(&rho.linear_body, &facts);
            homs.sort();
            for h in homs {
                let frontier: Vec<Term> = rho.frontier.iter().map(|v| h[v].clone()).collect();
                for phi in cond_set(rho, &h, &snapshot) {
                    if !condition_consistent(&phi) {
                        continue;
                    }
                    let candidate = ConditionalTuple {
                        tuple: frontier.clone(),
                        cond: phi,
                    };
                    let mut subsumed = false;
                    for prior in &history[i] {
                        if cond_subsumes(&candidate, prior)? {
                            subsumed = true;
                            break;
                        }
                    }
                    if subsumed {
                        continue;
                    }
                    steps += 1;
                    if steps > config.step_cap {
                        return Err(CondError::StepCapExceeded(config.step_cap));
                    }
                    let mut ext = h.clone();
                    for z in &rho.existentials {
                        ext.insert(z.clone(), Term::Null(nulls.fresh()));
                    }
                    for a in &rho.head {
                        ci.insert(ConditionalFact::new(apply(a, &ext), candidate.cond.clone()));
                    }
                    if config.trace {
                        let args: Vec<String> = frontier.iter().map(ToString::to_string).collect();
                        trace.push(format!("step {} ({}) :: {}", rho.id, args.join(","), candidate.cond));
                    }
                    history[i].push(candidate);
                    applied = true;
                }
            }
        }
        if !applied {
            return Ok(ConditionalChaseRun {
                result: ci.restrict(&setting.target),
                steps,
                trace,
            });
        }
    }
}

/// The world of `ci` under `nu`.
pub fn world(ci: &ConditionalInstance, nu: &BTreeMap<NullId, Const>) -> Instance {
    ci.iter()
        .filter(|cf| cf.cond.holds(nu))
        .map(|cf| {
            cf.fact.map_terms(|t| match t {
                Term::Null(n) => Term::Const(nu[n].clone()),
                _ => t.clone(),
            })
        })
        .collect()
}

/// Worlds of every valuation of the nulls of `ci` into its constants,
/// `extra` and `fresh_count` fresh constants.
pub fn possible_worlds(ci: &ConditionalInstance, extra: &BTreeSet<Const>, fresh_count: usize) -> BTreeSet<Instance> {
    let mut domain: Vec<Const> = ci.constants().union(extra).cloned().collect();
    domain.extend(fresh_names(&domain, fresh_count));
    let nulls: Vec<NullId> = ci.nulls().into_iter().collect();
    let mut out = BTreeSet::new();
    if domain.is_empty() && !nulls.is_empty() {
        return out;
    }
    let mut idx = vec![0usize; nulls.len()];
    loop {
        let nu: BTreeMap<NullId, Const> = nulls.iter().copied().zip(idx.iter().map(|&i| domain[i].clone())).collect();
        out.insert(world(ci, &nu));
        let mut k = 0;
        while k < idx.len() {
            idx[k] += 1;
            if idx[k] < domain.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            return out;
        }
    }
}

/// Tuples of constants of `ci` and `q` in the answers of `q` on every
/// possible world. Worlds are taken up to renaming of values outside
/// those constants; `fresh_count` of them are available, and the number
/// of nulls always suffices.
pub fn conditional_certain_exact(ci: &ConditionalInstance, q: &Query, fresh_count: usize) -> BTreeSet<Tuple> {
    let known: BTreeSet<Const> = ci.constants().union(&q.constants()).cloned().collect();
    let consts: Vec<Const> = known.iter().cloned().collect();
    let nulls: Vec<NullId> = ci.nulls().into_iter().collect();
    let limit = nulls.len().min(fresh_count);
    let mut acc: Option<BTreeSet<Tuple>> = None;
    let mut budget = usize::MAX;
    for_each_pattern(&nulls, &consts, &mut budget, &mut |nu| {
        let distinct_fresh: BTreeSet<&Const> = nu.values().filter(|c| !known.contains(*c)).collect();
        if distinct_fresh.len() > limit {
            return true;
        }
        let ans: BTreeSet<Tuple> = evaluate(q, &world(ci, nu))
            .into_iter()
            .filter(|t| t.iter().all(|x| x.as_const().is_some_and(|c| known.contains(c))))
            .collect();
        acc = Some(match acc.take() {
            None => ans,
            Some(prev) => prev.intersection(&ans).cloned().collect(),
        });
        true
    });
    acc.unwrap_or_default()
}
