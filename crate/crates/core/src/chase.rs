//! The semi-oblivious chase with eager EGD application.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    apply, find_homomorphisms, Egd, Homomorphism, Instance, ModelError, NullGen, Setting, Term, Tgd,
};
use crate::query::{drop_null_tuples, evaluate, CertainAnswers, Query};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChaseResult {
    /// A universal solution, restricted to the target schema.
    Success(Instance),
    /// An EGD tried to equate two distinct constants.
    Failure { egd: String, witness: Homomorphism },
}

impl ChaseResult {
    pub fn is_success(&self) -> bool {
        matches!(self, ChaseResult::Success(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChaseError {
    #[error("chase exceeded the step cap of {0} steps; the setting is probably not weakly acyclic")]
    StepCapExceeded(usize),
    #[error("certain answers through the chase need a positive query")]
    NotPositive,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, Default)]
pub struct ChaseConfig {
    /// Maximum number of TGD steps; `None` uses [`default_step_cap`].
    pub step_cap: Option<usize>,
    /// Record one line per step in [`ChaseRun::trace`].
    pub trace: bool,
}

#[derive(Clone, Debug)]
pub struct ChaseRun {
    pub result: ChaseResult,
    /// Number of TGD steps fired.
    pub steps: usize,
    pub trace: Vec<String>,
}

const MIN_STEP_CAP: usize = 1000;

/// `positions(T) * (|adom(I)| + 1)^(max frontier arity) * |TGDs|`, but never
/// below a small floor so tiny inputs are not cut short.
pub fn default_step_cap(setting: &Setting, source: &Instance) -> usize {
    let positions = setting.target.position_count().max(1);
    let base = source.adom().len() + 1;
    let exp = setting.all_tgds().map(|t| t.frontier.len()).max().unwrap_or(0);
    let tgds = setting.all_tgds().count().max(1);
    let pow = u32::try_from(exp).map_or(usize::MAX, |e| base.saturating_pow(e));
    positions.saturating_mul(pow).saturating_mul(tgds).max(MIN_STEP_CAP)
}

pub fn chase(setting: &Setting, source: &Instance) -> Result<ChaseResult, ChaseError> {
    Ok(chase_with(setting, source, &ChaseConfig::default())?.result)
}

pub fn chase_with(setting: &Setting, source: &Instance, config: &ChaseConfig) -> Result<ChaseRun, ChaseError> {
    source.check_schema(&setting.source)?;
    if let Some(f) = source.iter().find(|f| f.has_null()) {
        return Err(ModelError::NullInSource(f.to_string()).into());
    }
    let cap = config.step_cap.unwrap_or_else(|| default_step_cap(setting, source));
    let tgds: Vec<&Tgd> = setting.all_tgds().collect();
    let egds: Vec<&Egd> = setting.egds().collect();
    let nulls = NullGen::new();
    let mut state = State {
        current: source.clone(),
        fired: BTreeSet::new(),
        trace: config.trace.then(Vec::new),
    };
    let mut steps = 0usize;

    if let Err(failure) = state.apply_egds(&egds) {
        return Ok(state.finish(failure, steps));
    }
    loop {
        let mut pending = Vec::new();
        for (i, tgd) in tgds.iter().enumerate() {
            for h in find_homomorphisms(&tgd.body, &state.current) {
                let key: Vec<Term> = tgd.frontier.iter().map(|v| h[v].clone()).collect();
                if !state.fired.contains(&(i, key.clone())) {
                    pending.push((i, key, h));
                }
            }
        }
        if pending.is_empty() {
            let universal = state.current.restrict(&setting.target);
            return Ok(state.finish(ChaseResult::Success(universal), steps));
        }
        for (i, key, mut h) in pending {
            if !state.fired.insert((i, key.clone())) {
                continue;
            }
            steps += 1;
            if steps > cap {
                return Err(ChaseError::StepCapExceeded(cap));
            }
            let tgd = tgds[i];
            for z in &tgd.existentials {
                h.insert(z.clone(), Term::Null(nulls.fresh()));
            }
            if let Some(t) = &mut state.trace {
                t.push(format!("fire {} ({})", tgd.id, join(&key)));
            }
            for a in &tgd.head {
                state.current.insert(apply(a, &h));
            }
            match state.apply_egds(&egds) {
                Err(failure) => return Ok(state.finish(failure, steps)),
                // A merge invalidates the remaining pending homomorphisms.
                Ok(true) => break,
                Ok(false) => {}
            }
        }
    }
}

fn join(terms: &[Term]) -> String {
    terms.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

struct State {
    current: Instance,
    fired: BTreeSet<(usize, Vec<Term>)>,
    trace: Option<Vec<String>>,
}

impl State {
    fn finish(self, result: ChaseResult, steps: usize) -> ChaseRun {
        ChaseRun {
            result,
            steps,
            trace: self.trace.unwrap_or_default(),
        }
    }

    /// Applies EGDs until none is violated. Returns whether any terms were
    /// merged.
    fn apply_egds(&mut self, egds: &[&Egd]) -> Result<bool, ChaseResult> {
        let mut merged = false;
        'outer: loop {
            for egd in egds {
                for h in find_homomorphisms(&egd.body, &self.current) {
                    let (a, b) = (&h[&egd.lhs], &h[&egd.rhs]);
                    if a == b {
                        continue;
                    }
                    let (from, to) = match (a, b) {
                        (Term::Const(_), Term::Const(_)) => {
                            return Err(ChaseResult::Failure {
                                egd: egd.id.clone(),
                                witness: h,
                            });
                        }
                        (Term::Null(_), Term::Const(_)) => (a.clone(), b.clone()),
                        (Term::Const(_), Term::Null(_)) => (b.clone(), a.clone()),
                        _ => {
                            if a > b {
                                (a.clone(), b.clone())
                            } else {
                                (b.clone(), a.clone())
                            }
                        }
                    };
                    self.replace(&from, &to);
                    merged = true;
                    continue 'outer;
                }
            }
            return Ok(merged);
        }
    }

    fn replace(&mut self, from: &Term, to: &Term) {
        let sub = |t: &Term| if t == from { to.clone() } else { t.clone() };
        self.current = self.current.map_terms(sub);
        self.fired = std::mem::take(&mut self.fired)
            .into_iter()
            .map(|(i, key)| (i, key.iter().map(sub).collect()))
            .collect();
        if let Some(t) = &mut self.trace {
            t.push(format!("merge {from} {to}"));
        }
    }
}

/// Classical certain answers of a positive query: the null-free answers on
/// the universal solution.
pub fn certain_answers_positive(setting: &Setting, source: &Instance, q: &Query) -> Result<CertainAnswers, ChaseError> {
    certain_answers_positive_with(setting, source, q, &ChaseConfig::default())
}

pub fn certain_answers_positive_with(
    setting: &Setting,
    source: &Instance,
    q: &Query,
    config: &ChaseConfig,
) -> Result<CertainAnswers, ChaseError> {
    if !q.is_positive() {
        return Err(ChaseError::NotPositive);
    }
    Ok(match chase_with(setting, source, config)?.result {
        ChaseResult::Success(j) => CertainAnswers::Tuples(drop_null_tuples(&evaluate(q, &j))),
        ChaseResult::Failure { .. } => CertainAnswers::NoSolutions,
    })
}

/// Whether any solution exists, decided by running the chase.
pub fn exists_solution(setting: &Setting, source: &Instance) -> Result<bool, ChaseError> {
    Ok(chase(setting, source)?.is_success())
}

/// Renames nulls to `_1, _2, ...` in order of first appearance in the
/// sorted fact list, so chase results can be compared up to null renaming.
pub fn canonical_nulls(inst: &Instance) -> Instance {
    let mut names: BTreeMap<Term, Term> = BTreeMap::new();
    let mut next = 0u32;
    for f in inst.iter() {
        for t in &f.args {
            if t.is_null() && !names.contains_key(t) {
                next += 1;
                names.insert(t.clone(), Term::null(next));
            }
        }
    }
    inst.map_terms(|t| names.get(t).cloned().unwrap_or_else(|| t.clone()))
}
