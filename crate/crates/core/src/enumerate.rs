//! Exact enumeration of supported solutions over a bounded set of constants,
//! and the supported certain answers derived from it.

use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::is_weakly_acyclic;
use crate::chase::{chase_with, ChaseConfig, ChaseError};
use crate::model::{apply, find_homomorphisms, satisfies_egd, Const, Instance, ModelError, Setting, Term, Tgd};
use crate::query::{evaluate, CertainAnswers, Query, Tuple};

/// Constants a search may pick for existential variables: every constant of
/// the input (`base`) plus `fresh` constants that occur nowhere in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstantBudget {
    base: BTreeSet<Const>,
    fresh: Vec<Const>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BudgetPolicy {
    /// Fail with [`EnumError::BudgetTooSmall`] when a branch needs more
    /// fresh constants than the budget holds.
    #[default]
    Error,
    /// Silently restrict the search to the budget.
    Restrict,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnumError {
    #[error("the budget of {0} fresh constants is too small; raise it with --fresh")]
    BudgetTooSmall(usize),
    #[error("fresh constant {0} already occurs in the setting, source or query")]
    FreshCollision(Const),
    #[error("query constant {0} is not part of the budget")]
    ConstantOutsideBudget(Const),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Chase(#[from] ChaseError),
}

fn input_constants(setting: &Setting, source: &Instance, query: Option<&Query>) -> BTreeSet<Const> {
    let mut base = setting.constants();
    base.extend(source.constants());
    if let Some(q) = query {
        base.extend(q.constants());
    }
    base
}

impl ConstantBudget {
    /// Budget over the input's constants plus `m` fresh constants named
    /// `c1, c2, ...`, skipping names already in use.
    pub fn new(setting: &Setting, source: &Instance, query: Option<&Query>, m: usize) -> Self {
        let base = input_constants(setting, source, query);
        let fresh = (1..)
            .map(|i| Const::new(format!("c{i}")))
            .filter(|c| !base.contains(c))
            .take(m)
            .collect();
        ConstantBudget { base, fresh }
    }

    /// Budget with explicitly named fresh constants.
    pub fn with_fresh(
        setting: &Setting,
        source: &Instance,
        query: Option<&Query>,
        fresh: Vec<Const>,
    ) -> Result<Self, EnumError> {
        let base = input_constants(setting, source, query);
        let mut seen = BTreeSet::new();
        for c in &fresh {
            if base.contains(c) || !seen.insert(c) {
                return Err(EnumError::FreshCollision(c.clone()));
            }
        }
        Ok(ConstantBudget { base, fresh })
    }

    /// Budget sized by [`default_fresh_count`].
    pub fn default_for(setting: &Setting, source: &Instance, query: Option<&Query>) -> Result<Self, EnumError> {
        let m = default_fresh_count(setting, source)?;
        Ok(ConstantBudget::new(setting, source, query, m))
    }

    pub fn base(&self) -> &BTreeSet<Const> {
        &self.base
    }

    pub fn fresh(&self) -> &[Const] {
        &self.fresh
    }

    pub fn m(&self) -> usize {
        self.fresh.len()
    }

    /// Base and fresh constants together, base first.
    pub fn all(&self) -> impl Iterator<Item = &Const> {
        self.base.iter().chain(&self.fresh)
    }

    pub fn is_fresh(&self, c: &Const) -> bool {
        self.fresh.contains(c)
    }
}

/// Steps of the classical chase times the widest existential tuple: each
/// step of a run introduces at most that many new values.
pub fn default_fresh_count(setting: &Setting, source: &Instance) -> Result<usize, ChaseError> {
    let run = chase_with(setting, source, &ChaseConfig::default())?;
    Ok(run.steps * setting.max_existential_arity())
}

type Chosen = BTreeMap<(usize, Vec<Const>), Vec<Const>>;

struct Search<'a> {
    setting: &'a Setting,
    tgds: Vec<&'a Tgd>,
    base: Vec<Const>,
    fresh: &'a [Const],
    policy: BudgetPolicy,
}

#[derive(Clone)]
struct Node {
    current: Instance,
    chosen: Chosen,
    used_fresh: usize,
}

fn frontier_key(tgd: &Tgd, h: &BTreeMap<crate::model::Var, Term>) -> Vec<Const> {
    tgd.frontier
        .iter()
        .map(|v| h[v].as_const().cloned().expect("null-free instance"))
        .collect()
}

impl Search<'_> {
    /// Least fixpoint of the ground TGDs coherent with `node.chosen`. Returns
    /// the first trigger whose existential values are still unchosen.
    fn saturate(&self, node: &mut Node) -> Option<(usize, Vec<Const>)> {
        loop {
            let mut new = Vec::new();
            let mut open = None;
            for (i, tgd) in self.tgds.iter().enumerate() {
                for mut h in find_homomorphisms(&tgd.body, &node.current) {
                    if tgd.has_existentials() {
                        let key = frontier_key(tgd, &h);
                        let Some(vals) = node.chosen.get(&(i, key.clone())) else {
                            open.get_or_insert((i, key));
                            continue;
                        };
                        for (z, c) in tgd.existentials.iter().zip(vals) {
                            h.insert(z.clone(), Term::Const(c.clone()));
                        }
                    }
                    new.extend(tgd.head.iter().map(|a| apply(a, &h)).filter(|f| !node.current.contains(f)));
                }
            }
            if new.is_empty() {
                return open;
            }
            node.current.extend(new);
        }
    }

    fn run(&self, mut node: Node, out: &mut BTreeSet<Instance>) -> Result<(), EnumError> {
        let open = self.saturate(&mut node);
        // Facts only grow below this node, so a violated EGD stays violated.
        if !self.setting.egds().all(|e| satisfies_egd(&node.current, e)) {
            return Ok(());
        }
        let Some((i, key)) = open else {
            out.insert(node.current.restrict(&self.setting.target));
            return Ok(());
        };
        let arity = self.tgds[i].existentials.len();
        self.assign(&node, (i, key), Vec::with_capacity(arity), arity, node.used_fresh, out)
    }

    /// Branches over the values of the remaining existential variables of
    /// one trigger. A fresh constant `c_{k+1}` is offered only once `c_1..c_k`
    /// are in use, which prunes branches equal up to renaming fresh values.
    fn assign(
        &self,
        node: &Node,
        trigger: (usize, Vec<Const>),
        vals: Vec<Const>,
        arity: usize,
        used: usize,
        out: &mut BTreeSet<Instance>,
    ) -> Result<(), EnumError> {
        if vals.len() == arity {
            let mut child = node.clone();
            child.chosen.insert(trigger, vals);
            child.used_fresh = used;
            return self.run(child, out);
        }
        let reusable = self.base.iter().chain(&self.fresh[..used]);
        for c in reusable {
            let mut next = vals.clone();
            next.push(c.clone());
            self.assign(node, trigger.clone(), next, arity, used, out)?;
        }
        match self.fresh.get(used) {
            Some(c) => {
                let mut next = vals;
                next.push(c.clone());
                self.assign(node, trigger, next, arity, used + 1, out)
            }
            None if self.policy == BudgetPolicy::Error => Err(EnumError::BudgetTooSmall(self.fresh.len())),
            None => Ok(()),
        }
    }
}

/// Supported solutions up to renaming of fresh constants. Each returned
/// instance uses fresh constants `c_1..c_k` of the budget for some `k`, and
/// is the least representative of its renaming class.
pub fn enumerate_canonical(
    setting: &Setting,
    source: &Instance,
    budget: &ConstantBudget,
    policy: BudgetPolicy,
) -> Result<BTreeSet<Instance>, EnumError> {
    source.check_schema(&setting.source)?;
    if let Some(f) = source.iter().find(|f| f.has_null()) {
        return Err(ModelError::NullInSource(f.to_string()).into());
    }
    let search = Search {
        setting,
        tgds: setting.all_tgds().collect(),
        base: budget.base.iter().cloned().collect(),
        fresh: &budget.fresh,
        policy,
    };
    let mut raw = BTreeSet::new();
    search.run(
        Node {
            current: source.clone(),
            chosen: Chosen::new(),
            used_fresh: 0,
        },
        &mut raw,
    )?;
    Ok(raw.into_iter().map(|j| canonical_form(&j, budget)).collect())
}

/// Up to this many fresh constants, [`canonical_form`] minimizes over all
/// permutations; beyond it, fresh constants are numbered by first occurrence.
const MAX_PERMUTED: usize = 6;

/// Renames the fresh constants of `inst` onto `c_1..c_k` of the budget,
/// choosing the least resulting instance.
pub fn canonical_form(inst: &Instance, budget: &ConstantBudget) -> Instance {
    let mut used: Vec<Const> = Vec::new();
    for f in inst.iter() {
        for c in f.constants() {
            if budget.is_fresh(c) && !used.contains(c) {
                used.push(c.clone());
            }
        }
    }
    let target = &budget.fresh[..used.len()];
    let rename = |perm: &[usize]| {
        let map: BTreeMap<&Const, &Const> = used.iter().zip(perm.iter().map(|&p| &target[p])).collect();
        inst.map_terms(|t| match t {
            Term::Const(c) => map.get(c).map_or_else(|| t.clone(), |d| Term::Const((*d).clone())),
            _ => t.clone(),
        })
    };
    let identity: Vec<usize> = (0..used.len()).collect();
    if used.len() > MAX_PERMUTED {
        return rename(&identity);
    }
    permutations(used.len())
        .iter()
        .map(|p| rename(p))
        .min()
        .unwrap_or_else(|| inst.clone())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    injections(n, n)
}

/// All injective maps `0..k -> 0..m`, as vectors of images.
fn injections(k: usize, m: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in 0..m {
            if !cur.contains(&i) {
                cur.push(i);
                go(k, m, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    if k <= m {
        go(k, m, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn fresh_used(inst: &Instance, budget: &ConstantBudget) -> Vec<Const> {
    budget
        .fresh
        .iter()
        .filter(|c| inst.iter().any(|f| f.constants().any(|d| d == *c)))
        .cloned()
        .collect()
}

/// Every supported solution whose constants lie in the budget: the canonical
/// representatives closed under injective renaming of fresh constants.
pub fn enumerate_supported_solutions(
    setting: &Setting,
    source: &Instance,
    budget: &ConstantBudget,
    policy: BudgetPolicy,
) -> Result<BTreeSet<Instance>, EnumError> {
    let mut out = BTreeSet::new();
    for j in enumerate_canonical(setting, source, budget, policy)? {
        let used = fresh_used(&j, budget);
        for image in injections(used.len(), budget.m()) {
            let map: BTreeMap<&Const, &Const> = used.iter().zip(image.iter().map(|&i| &budget.fresh[i])).collect();
            out.insert(j.map_terms(|t| match t {
                Term::Const(c) => map.get(c).map_or_else(|| t.clone(), |d| Term::Const((*d).clone())),
                _ => t.clone(),
            }));
        }
    }
    Ok(out)
}

/// Answers of `q` on every renaming of `j` onto budget constants, without
/// materializing the renamings.
fn answers_on_all_renamings(q: &Query, j: &Instance, budget: &ConstantBudget) -> BTreeSet<Tuple> {
    let answers = evaluate(q, j);
    let k = fresh_used(j, budget).len();
    let m = budget.m();
    answers
        .iter()
        .filter(|t| {
            let fresh_in_t: Vec<&Const> = t
                .iter()
                .filter_map(Term::as_const)
                .filter(|c| budget.is_fresh(c))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if fresh_in_t.is_empty() {
                return true;
            }
            if k < m {
                // Some renaming avoids one of t's fresh constants.
                return false;
            }
            // Every permutation of the fresh constants maps an answer onto t.
            injections(fresh_in_t.len(), m).into_iter().all(|image| {
                let map: BTreeMap<&Const, &Const> =
                    fresh_in_t.iter().copied().zip(image.iter().map(|&i| &budget.fresh[i])).collect();
                let moved: Tuple = t
                    .iter()
                    .map(|x| match x {
                        Term::Const(c) => map.get(c).map_or_else(|| x.clone(), |d| Term::Const((*d).clone())),
                        _ => x.clone(),
                    })
                    .collect();
                answers.contains(&moved)
            })
        })
        .cloned()
        .collect()
}

/// Intersection of `q` over the supported solutions within the budget.
pub fn supported_certain_answers(
    setting: &Setting,
    source: &Instance,
    q: &Query,
    budget: &ConstantBudget,
    policy: BudgetPolicy,
) -> Result<CertainAnswers, EnumError> {
    for c in q.constants() {
        if budget.is_fresh(&c) {
            return Err(EnumError::FreshCollision(c));
        }
        if !budget.base.contains(&c) {
            return Err(EnumError::ConstantOutsideBudget(c));
        }
    }
    let solutions = enumerate_canonical(setting, source, budget, policy)?;
    Ok(CertainAnswers::intersect_all(
        solutions.iter().map(|j| answers_on_all_renamings(q, j, budget)),
    ))
}

/// Whether a supported solution exists. Weakly acyclic settings are decided
/// by the chase. Otherwise a failing chase still proves there is none; if
/// the chase hits its cap, a bounded enumeration decides, which can miss
/// solutions that need more fresh constants than it allows.
pub fn exists_supported_solution(setting: &Setting, source: &Instance) -> Result<bool, EnumError> {
    match chase_with(setting, source, &ChaseConfig::default()) {
        Ok(run) => Ok(run.result.is_success()),
        Err(ChaseError::StepCapExceeded(_)) if !is_weakly_acyclic(setting) => {
            let m = setting.max_existential_arity() * setting.all_tgds().count() * (source.adom().len() + 1);
            let budget = ConstantBudget::new(setting, source, None, m);
            let found = enumerate_canonical(setting, source, &budget, BudgetPolicy::Restrict)?;
            Ok(!found.is_empty())
        }
        Err(e) => Err(e.into()),
    }
}
