use std::collections::VecDeque;

use super::ground::{ground_with, GroundProgram, GroundRule, Grounding, DEFAULT_GROUNDING_CAP};
use super::{AspError, ExtensionalDb, Program};
use crate::model::Instance;

#[derive(Clone, Copy, Debug)]
pub struct SolveConfig {
    pub grounding: Grounding,
    pub cap: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            grounding: Grounding::Relevance,
            cap: DEFAULT_GROUNDING_CAP,
        }
    }
}

/// Rules whose negative body holds in `m`, with negative literals removed.
pub fn reduct(g: &GroundProgram, m: &Instance) -> GroundProgram {
    let rules = g
        .rules
        .iter()
        .filter(|r| r.neg.iter().all(|&a| !m.contains(g.atom(a))))
        .map(|r| GroundRule {
            head: r.head,
            pos: r.pos.clone(),
            neg: Vec::new(),
        })
        .collect();
    g.with_rules(rules)
}

/// Least model of the definite rules of `g` selected by `enabled`.
fn least_model(g: &GroundProgram, occurs: &[Vec<usize>], enabled: &dyn Fn(&GroundRule) -> bool) -> Vec<bool> {
    let n = g.atoms().len();
    let mut model = vec![false; n];
    let mut missing: Vec<usize> = g.rules.iter().map(|r| r.pos.len()).collect();
    let mut queue = VecDeque::new();
    let fire = |r: &GroundRule, model: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
        if let Some(h) = r.head {
            if !model[h] {
                model[h] = true;
                queue.push_back(h);
            }
        }
    };
    for r in &g.rules {
        if r.pos.is_empty() && enabled(r) {
            fire(r, &mut model, &mut queue);
        }
    }
    while let Some(a) = queue.pop_front() {
        for &ri in &occurs[a] {
            missing[ri] -= 1;
            let r = &g.rules[ri];
            if missing[ri] == 0 && enabled(r) {
                fire(r, &mut model, &mut queue);
            }
        }
    }
    model
}

fn occurrences(g: &GroundProgram) -> Vec<Vec<usize>> {
    let mut occurs = vec![Vec::new(); g.atoms().len()];
    for (i, r) in g.rules.iter().enumerate() {
        for &a in &r.pos {
            occurs[a].push(i);
        }
    }
    occurs
}

/// True iff `m` is the least model of the reduct of `g` and satisfies the
/// constraints of that reduct.
pub fn is_stable_model(g: &GroundProgram, m: &Instance) -> bool {
    if m.iter().any(|a| g.id(a).is_none()) {
        return false;
    }
    let r = reduct(g, m);
    let occurs = occurrences(&r);
    let least = r.to_instance(&least_model(&r, &occurs, &|_| true));
    let violated = r
        .rules
        .iter()
        .any(|c| c.head.is_none() && c.pos.iter().all(|&a| m.contains(r.atom(a))));
    &least == m && !violated
}

struct Solver<'a> {
    g: &'a GroundProgram,
    occurs: Vec<Vec<usize>>,
    /// Atoms occurring in some negative literal, in branching order.
    guess: Vec<usize>,
    out: Vec<Vec<bool>>,
}

impl Solver<'_> {
    /// Lower and upper bounds of any stable model extending `assign`.
    fn bounds(&self, assign: &[Option<bool>]) -> (Vec<bool>, Vec<bool>) {
        let lower = least_model(self.g, &self.occurs, &|r| r.neg.iter().all(|&a| assign[a] == Some(false)));
        let upper = least_model(self.g, &self.occurs, &|r| r.neg.iter().all(|&a| assign[a] != Some(true)));
        (lower, upper)
    }

    fn search(&mut self, mut assign: Vec<Option<bool>>) {
        let lower = loop {
            let (lower, upper) = self.bounds(&assign);
            let mut changed = false;
            for &a in &self.guess {
                match assign[a] {
                    Some(true) if !upper[a] => return,
                    Some(false) if lower[a] => return,
                    None if lower[a] => {
                        assign[a] = Some(true);
                        changed = true;
                    }
                    None if !upper[a] => {
                        assign[a] = Some(false);
                        changed = true;
                    }
                    _ => {}
                }
            }
            let doomed = self.g.rules.iter().any(|c| {
                c.head.is_none() && c.pos.iter().all(|&a| lower[a]) && c.neg.iter().all(|&a| assign[a] == Some(false))
            });
            if doomed {
                return;
            }
            if !changed {
                break lower;
            }
        };
        match self.guess.iter().copied().find(|&a| assign[a].is_none()) {
            // With every guess fixed, both bounds coincide.
            None => self.out.push(lower),
            Some(a) => {
                for value in [true, false] {
                    let mut next = assign.clone();
                    next[a] = Some(value);
                    self.search(next);
                }
            }
        }
    }
}

/// All stable models of a ground program, as truth vectors over its atoms.
pub(super) fn solve_ground(g: &GroundProgram) -> Vec<Vec<bool>> {
    let mut negative: Vec<usize> = g.rules.iter().flat_map(|r| r.neg.iter().copied()).collect();
    negative.sort_unstable();
    negative.dedup();
    // DiffChoice atoms decide the Chosen atoms, which settle the rest of a
    // translated program.
    negative.sort_by_key(|&a| !g.atom(a).relation.starts_with("DiffChoice_"));
    let mut solver = Solver {
        g,
        occurs: occurrences(g),
        guess: negative,
        out: Vec::new(),
    };
    solver.search(vec![None; g.atoms().len()]);
    solver.out
}

pub fn stable_models(p: &Program, ed: &ExtensionalDb) -> Result<Vec<Instance>, AspError> {
    stable_models_with(p, ed, &SolveConfig::default())
}

pub fn stable_models_with(p: &Program, ed: &ExtensionalDb, config: &SolveConfig) -> Result<Vec<Instance>, AspError> {
    let g = ground_with(p, ed, config.grounding, config.cap)?;
    let mut models: Vec<Instance> = solve_ground(&g).iter().map(|m| g.to_instance(m)).collect();
    models.sort();
    models.dedup();
    debug_assert!(models.iter().all(|m| is_stable_model(&g, m)));
    Ok(models)
}
