use std::collections::{BTreeSet, HashMap, HashSet};

use super::{AspError, ExtensionalDb, Literal, Program, Rule};
use crate::model::{apply, find_homomorphisms, Atom, Const, Homomorphism, Instance, Term, Var};

/// A ground rule over atom indices of its [`GroundProgram`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundRule {
    pub head: Option<usize>,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct GroundProgram {
    atoms: Vec<Atom>,
    index: HashMap<Atom, usize>,
    pub rules: Vec<GroundRule>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Grounding {
    /// Only instances whose positive body can be derived, with negative
    /// literals on underivable atoms removed.
    #[default]
    Relevance,
    /// Every substitution over the program's constants.
    Exhaustive,
}

pub const DEFAULT_GROUNDING_CAP: usize = 2_000_000;

impl GroundProgram {
    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn id(&self, a: &Atom) -> Option<usize> {
        self.index.get(a).copied()
    }

    fn intern(&mut self, a: Atom) -> usize {
        if let Some(&i) = self.index.get(&a) {
            return i;
        }
        self.atoms.push(a.clone());
        self.index.insert(a, self.atoms.len() - 1);
        self.atoms.len() - 1
    }

    /// A program over the same atom table with other rules.
    pub(super) fn with_rules(&self, rules: Vec<GroundRule>) -> GroundProgram {
        GroundProgram {
            atoms: self.atoms.clone(),
            index: self.index.clone(),
            rules,
        }
    }

    pub fn to_instance(&self, model: &[bool]) -> Instance {
        model
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(i, _)| self.atoms[i].clone())
            .collect()
    }

    /// Ground rules as text, one per line, in atom-table order.
    pub fn describe(&self) -> Vec<String> {
        self.rules
            .iter()
            .map(|r| {
                let rule = Rule {
                    head: r.head.map(|h| self.atoms[h].clone()),
                    body: r
                        .pos
                        .iter()
                        .map(|&a| Literal::Pos(self.atoms[a].clone()))
                        .chain(r.neg.iter().map(|&a| Literal::Neg(self.atoms[a].clone())))
                        .collect(),
                    choice: None,
                };
                rule.to_string()
            })
            .collect()
    }
}

type RawRule = (Option<Atom>, Vec<Atom>, Vec<Atom>);

/// Grounds `rule` under `h`; `None` if a body comparison fails.
fn instantiate(rule: &Rule, h: &Homomorphism) -> Option<RawRule> {
    let term = |t: &Term| match t {
        Term::Var(v) => h[v].clone(),
        _ => t.clone(),
    };
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for l in &rule.body {
        match l {
            Literal::Pos(a) => pos.push(apply(a, h)),
            Literal::Neg(a) => neg.push(apply(a, h)),
            Literal::Eq(a, b) if term(a) != term(b) => return None,
            Literal::Neq(a, b) if term(a) == term(b) => return None,
            Literal::Eq(..) | Literal::Neq(..) => {}
        }
    }
    Some((rule.head.as_ref().map(|a| apply(a, h)), pos, neg))
}

fn assemble(ed: &ExtensionalDb, raw: impl IntoIterator<Item = RawRule>, keep_neg: impl Fn(&Atom) -> bool) -> GroundProgram {
    let mut g = GroundProgram::default();
    let mut rules = BTreeSet::new();
    for f in ed.facts.iter() {
        let head = g.intern(f.clone());
        rules.insert(GroundRule {
            head: Some(head),
            pos: Vec::new(),
            neg: Vec::new(),
        });
    }
    for (head, pos, neg) in raw {
        let head = head.map(|a| g.intern(a));
        let mut pos: Vec<usize> = pos.into_iter().map(|a| g.intern(a)).collect();
        let mut neg: Vec<usize> = neg.into_iter().filter(|a| keep_neg(a)).map(|a| g.intern(a)).collect();
        pos.sort_unstable();
        pos.dedup();
        neg.sort_unstable();
        neg.dedup();
        rules.insert(GroundRule { head, pos, neg });
    }
    g.rules = rules.into_iter().collect();
    g
}

/// Relevance grounding with the default cap.
pub fn ground(p: &Program, ed: &ExtensionalDb) -> Result<GroundProgram, AspError> {
    ground_with(p, ed, Grounding::Relevance, DEFAULT_GROUNDING_CAP)
}

/// Grounds `p` with choice rules expanded. Fails once more than `cap`
/// ground rules are produced.
pub fn ground_with(p: &Program, ed: &ExtensionalDb, mode: Grounding, cap: usize) -> Result<GroundProgram, AspError> {
    match mode {
        Grounding::Relevance => ground_relevant(p, ed, cap),
        Grounding::Exhaustive => ground_exhaustive(p, ed, cap),
    }
}

fn ground_relevant(p: &Program, ed: &ExtensionalDb, cap: usize) -> Result<GroundProgram, AspError> {
    let program = p.expanded();
    // Over-approximates every stable model: the least model of the rules
    // with negative literals ignored.
    let mut possible = ed.facts.clone();
    let mut raw: HashSet<RawRule> = HashSet::new();
    loop {
        let mut changed = false;
        for rule in &program.rules {
            let body: Vec<Atom> = rule.positive_atoms().cloned().collect();
            for h in find_homomorphisms(&body, &possible) {
                let Some(r) = instantiate(rule, &h) else {
                    continue;
                };
                if let Some(head) = &r.0 {
                    changed |= possible.insert(head.clone());
                }
                raw.insert(r);
                if raw.len() > cap {
                    return Err(AspError::GroundingCap(cap));
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(assemble(ed, raw, |a| possible.contains(a)))
}

/// Every ground instance of every rule over the constants of `p` and `ed`.
pub fn ground_exhaustive(p: &Program, ed: &ExtensionalDb, cap: usize) -> Result<GroundProgram, AspError> {
    let program = p.expanded();
    let mut universe: BTreeSet<Const> = ed.facts.constants();
    for r in &program.rules {
        for t in r.head.iter().flat_map(|h| &h.args).chain(r.body.iter().flat_map(Literal::terms)) {
            if let Term::Const(c) = t {
                universe.insert(c.clone());
            }
        }
    }
    let universe: Vec<Term> = universe.into_iter().map(Term::Const).collect();
    let mut raw = Vec::new();
    for rule in &program.rules {
        let vars: Vec<Var> = rule.vars().into_iter().collect();
        let mut idx = vec![0usize; vars.len()];
        if !vars.is_empty() && universe.is_empty() {
            continue;
        }
        loop {
            let h: Homomorphism = vars.iter().cloned().zip(idx.iter().map(|&i| universe[i].clone())).collect();
            if let Some(r) = instantiate(rule, &h) {
                raw.push(r);
                if raw.len() > cap {
                    return Err(AspError::GroundingCap(cap));
                }
            }
            // Odometer increment over universe^vars.
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < universe.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    Ok(assemble(ed, raw, |_| true))
}
