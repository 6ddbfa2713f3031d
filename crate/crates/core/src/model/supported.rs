use std::collections::BTreeMap;

use super::atom::Instance;
use super::dependency::{Setting, Tgd};
use super::homomorphism::{apply, extend_homomorphisms, find_homomorphisms, satisfies_egd, Homomorphism};
use super::term::{Const, Term, Var};
use super::ModelError;

/// The triggered part of an ex-choice: for each (TGD id, frontier tuple) the
/// constants picked for the TGD's existential variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExChoice {
    pub choices: BTreeMap<(String, Vec<Const>), BTreeMap<Var, Const>>,
}

impl ExChoice {
    pub fn get(&self, tgd: &str, frontier: &[Const]) -> Option<&BTreeMap<Var, Const>> {
        self.choices.get(&(tgd.to_string(), frontier.to_vec()))
    }
}

/// True iff `candidate` is a supported solution of `source`.
pub fn is_supported_solution(setting: &Setting, source: &Instance, candidate: &Instance) -> Result<bool, ModelError> {
    Ok(supporting_choice(setting, source, candidate)?.is_some())
}

/// An ex-choice witnessing that `candidate` is a supported solution, if any.
///
/// The search picks, for every triggered frontier tuple, a head witness
/// inside `candidate`; with a choice fixed, the ground TGDs are definite
/// rules, so minimality reduces to the least fixpoint being `candidate`.
pub fn supporting_choice(
    setting: &Setting,
    source: &Instance,
    candidate: &Instance,
) -> Result<Option<ExChoice>, ModelError> {
    source.check_schema(&setting.source)?;
    candidate.check_schema(&setting.target)?;
    if !candidate.is_database() {
        return Ok(None);
    }
    if let Some(f) = source.iter().find(|f| f.has_null()) {
        return Err(ModelError::NullInSource(f.to_string()));
    }
    let tgds: Vec<&Tgd> = setting.all_tgds().collect();
    let mut chosen = BTreeMap::new();
    let found = search(setting, &tgds, source, candidate, &mut chosen);
    Ok(found.then(|| ExChoice {
        choices: chosen
            .into_iter()
            .map(|((i, key), vals)| {
                let tgd: &Tgd = tgds[i];
                let assignment = tgd.existentials.iter().cloned().zip(vals).collect();
                ((tgd.id.clone(), key), assignment)
            })
            .collect(),
    }))
}

type Chosen = BTreeMap<(usize, Vec<Const>), Vec<Const>>;

fn frontier_key(tgd: &Tgd, h: &Homomorphism) -> Vec<Const> {
    tgd.frontier
        .iter()
        .map(|v| h[v].as_const().cloned().expect("null-free instance"))
        .collect()
}

fn search(setting: &Setting, tgds: &[&Tgd], source: &Instance, candidate: &Instance, chosen: &mut Chosen) -> bool {
    let Some(current) = fixpoint(setting, tgds, source, candidate, chosen) else {
        return false;
    };
    let pending = tgds.iter().enumerate().find_map(|(i, tgd)| {
        if !tgd.has_existentials() {
            return None;
        }
        find_homomorphisms(&tgd.body, &current).into_iter().find_map(|h| {
            let key = frontier_key(tgd, &h);
            (!chosen.contains_key(&(i, key.clone()))).then_some((i, key, h))
        })
    });
    let Some((i, key, h)) = pending else {
        let target = current.restrict(&setting.target);
        return &target == candidate && setting.egds().all(|e| satisfies_egd(candidate, e));
    };
    let tgd = tgds[i];
    let seed: Homomorphism = tgd.frontier.iter().map(|v| (v.clone(), h[v].clone())).collect();
    let mut options: Vec<Vec<Const>> = extend_homomorphisms(&tgd.head, candidate, &seed)
        .into_iter()
        .map(|ext| {
            tgd.existentials
                .iter()
                .map(|z| ext[z].as_const().cloned().expect("null-free candidate"))
                .collect()
        })
        .collect();
    options.sort();
    options.dedup();
    for vals in options {
        chosen.insert((i, key.clone()), vals);
        if search(setting, tgds, source, candidate, chosen) {
            return true;
        }
        chosen.remove(&(i, key.clone()));
    }
    false
}

/// Least fixpoint of the ground TGDs coherent with `chosen`, starting from
/// `source`. Returns `None` as soon as a derived target fact falls outside
/// `candidate`.
fn fixpoint(
    setting: &Setting,
    tgds: &[&Tgd],
    source: &Instance,
    candidate: &Instance,
    chosen: &Chosen,
) -> Option<Instance> {
    let mut current = source.clone();
    loop {
        let mut new = Vec::new();
        for (i, tgd) in tgds.iter().enumerate() {
            for mut h in find_homomorphisms(&tgd.body, &current) {
                if tgd.has_existentials() {
                    let Some(vals) = chosen.get(&(i, frontier_key(tgd, &h))) else {
                        continue;
                    };
                    for (z, c) in tgd.existentials.iter().zip(vals) {
                        h.insert(z.clone(), Term::Const(c.clone()));
                    }
                }
                for a in &tgd.head {
                    let fact = apply(a, &h);
                    if !current.contains(&fact) {
                        new.push(fact);
                    }
                }
            }
        }
        if new.is_empty() {
            return Some(current);
        }
        for fact in new {
            if setting.target.contains(&fact.relation) && !candidate.contains(&fact) {
                return None;
            }
            current.insert(fact);
        }
    }
}
