use std::collections::BTreeMap;
use std::ops::ControlFlow;

use super::atom::{Atom, Instance};
use super::dependency::{Dependency, Egd, Setting, Tgd};
use super::term::{Term, Var};
use super::ModelError;

/// A mapping from variables to terms. Constants are mapped to themselves
/// implicitly, so only variable bindings are stored.
pub type Homomorphism = BTreeMap<Var, Term>;

/// Substitutes bound variables in `atom`; unbound variables are kept.
pub fn apply(atom: &Atom, h: &Homomorphism) -> Atom {
    atom.map_terms(|t| match t {
        Term::Var(v) => h.get(v).cloned().unwrap_or_else(|| t.clone()),
        _ => t.clone(),
    })
}

/// All homomorphisms from `body` into `target`, each restricted to `vars(body)`.
pub fn find_homomorphisms(body: &[Atom], target: &Instance) -> Vec<Homomorphism> {
    extend_homomorphisms(body, target, &Homomorphism::new())
}

/// All extensions of `seed` mapping `body` into `target`.
pub fn extend_homomorphisms(body: &[Atom], target: &Instance, seed: &Homomorphism) -> Vec<Homomorphism> {
    let mut out = Vec::new();
    let _ = for_each_homomorphism(body, target, seed, &mut |h| {
        out.push(h.clone());
        ControlFlow::<()>::Continue(())
    });
    out
}

/// Calls `visit` on every extension of `seed` mapping `body` into `target`,
/// stopping early when `visit` breaks.
pub fn for_each_homomorphism<B>(
    body: &[Atom],
    target: &Instance,
    seed: &Homomorphism,
    visit: &mut dyn FnMut(&Homomorphism) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let order = join_order(body, seed);
    let mut h = seed.clone();
    search(&order, 0, target, &mut h, visit)
}

/// Greedy order: prefer atoms whose variables are already bound.
fn join_order<'a>(body: &'a [Atom], seed: &Homomorphism) -> Vec<&'a Atom> {
    let mut bound: Vec<&Var> = seed.keys().collect();
    let mut rest: Vec<&Atom> = body.iter().collect();
    let mut order = Vec::with_capacity(body.len());
    while !rest.is_empty() {
        let (best, _) = rest
            .iter()
            .enumerate()
            .max_by_key(|(i, a)| {
                let fixed = a
                    .args
                    .iter()
                    .filter(|t| t.as_var().is_none_or(|v| bound.contains(&v)))
                    .count();
                (fixed, std::cmp::Reverse(*i))
            })
            .expect("non-empty");
        let atom = rest.remove(best);
        bound.extend(atom.vars());
        order.push(atom);
    }
    order
}

fn search<B>(
    order: &[&Atom],
    depth: usize,
    target: &Instance,
    h: &mut Homomorphism,
    visit: &mut dyn FnMut(&Homomorphism) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let Some(atom) = order.get(depth) else {
        return visit(h);
    };
    for fact in target.facts_of(&atom.relation) {
        if fact.arity() != atom.arity() {
            continue;
        }
        let mut added: Vec<Var> = Vec::new();
        let mut ok = true;
        for (pat, val) in atom.args.iter().zip(&fact.args) {
            match pat {
                Term::Var(v) => match h.get(v) {
                    Some(bound) if bound != val => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        h.insert(v.clone(), val.clone());
                        added.push(v.clone());
                    }
                },
                other => {
                    if other != val {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if ok {
            search(order, depth + 1, target, h, visit)?;
        }
        for v in added {
            h.remove(&v);
        }
    }
    ControlFlow::Continue(())
}

fn has_extension(atoms: &[Atom], target: &Instance, seed: &Homomorphism) -> bool {
    for_each_homomorphism(atoms, target, seed, &mut |_| ControlFlow::Break(())).is_break()
}

pub fn satisfies_tgd(inst: &Instance, tgd: &Tgd) -> bool {
    for_each_homomorphism(&tgd.body, inst, &Homomorphism::new(), &mut |h| {
        if has_extension(&tgd.head, inst, h) {
            ControlFlow::Continue(())
        } else {
            ControlFlow::Break(())
        }
    })
    .is_continue()
}

pub fn satisfies_egd(inst: &Instance, egd: &Egd) -> bool {
    for_each_homomorphism(&egd.body, inst, &Homomorphism::new(), &mut |h| {
        if h[&egd.lhs] == h[&egd.rhs] {
            ControlFlow::Continue(())
        } else {
            ControlFlow::Break(())
        }
    })
    .is_continue()
}

/// True iff `source ∪ candidate` satisfies the source-to-target TGDs and
/// `candidate` satisfies the target dependencies.
pub fn is_classical_solution(setting: &Setting, source: &Instance, candidate: &Instance) -> Result<bool, ModelError> {
    source.check_schema(&setting.source)?;
    candidate.check_schema(&setting.target)?;
    let both = source.union(candidate);
    if !setting.st_tgds.iter().all(|t| satisfies_tgd(&both, t)) {
        return Ok(false);
    }
    Ok(setting.t_deps.iter().all(|d| match d {
        Dependency::Tgd(t) => satisfies_tgd(candidate, t),
        Dependency::Egd(e) => satisfies_egd(candidate, e),
    }))
}
