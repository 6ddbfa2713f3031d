//! Logic programs with choice: translation of a setting into a program,
//! grounding, stable models and cautious answers.

mod emit;
mod external;
mod ground;
mod solve;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::enumerate::ConstantBudget;
use crate::model::{Atom, Instance, Schema, Setting, Term, Var};
use crate::query::{evaluate, Query, Tuple};

pub use emit::{emit_program_text, NameTable};
pub use external::{parse_models, run_external_solver, ExternalError};
pub use ground::{ground, ground_exhaustive, ground_with, GroundProgram, GroundRule, Grounding};
pub use solve::{is_stable_model, reduct, stable_models, stable_models_with, SolveConfig};

pub const DOM: &str = "Dom";
const RESERVED_PREFIXES: [&str; 4] = ["ExChoice_", "Range_", "Chosen_", "DiffChoice_"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AspError {
    #[error("relation {0} uses a name reserved by the translation")]
    ReservedName(String),
    #[error("unsafe rule `{rule}`: variable {var} occurs in no positive body atom")]
    Unsafe { rule: String, var: Var },
    #[error("choice variables of `{0}` must be disjoint and occur in the body")]
    BadChoice(String),
    #[error("grounding exceeded the cap of {0} rules")]
    GroundingCap(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Eq(Term, Term),
    Neq(Term, Term),
}

impl Literal {
    fn terms(&self) -> Vec<&Term> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.args.iter().collect(),
            Literal::Eq(a, b) | Literal::Neq(a, b) => vec![a, b],
        }
    }
}

/// `choice((domain),(range))`: the rule's consequences must respect the
/// functional dependency `domain -> range`. `label` names the auxiliary
/// relations of the expansion.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Choice {
    pub label: String,
    pub domain: Vec<Var>,
    pub range: Vec<Var>,
}

/// `head :- body`; a missing head is a constraint.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Option<Atom>,
    pub body: Vec<Literal>,
    pub choice: Option<Choice>,
}

fn vars_of<'a>(terms: impl IntoIterator<Item = &'a Term>) -> BTreeSet<Var> {
    terms.into_iter().filter_map(Term::as_var).cloned().collect()
}

impl Rule {
    /// Checks safety and the choice construct.
    pub fn new(head: Option<Atom>, body: Vec<Literal>, choice: Option<Choice>) -> Result<Rule, AspError> {
        let rule = Rule { head, body, choice };
        let positive = vars_of(rule.positive_atoms().flat_map(|a| &a.args));
        let all = vars_of(
            rule.head
                .iter()
                .flat_map(|h| &h.args)
                .chain(rule.body.iter().flat_map(Literal::terms)),
        );
        if let Some(var) = all.difference(&positive).next() {
            return Err(AspError::Unsafe {
                rule: rule.to_string(),
                var: var.clone(),
            });
        }
        if let Some(c) = &rule.choice {
            let dom: BTreeSet<&Var> = c.domain.iter().collect();
            let ok = c.range.iter().all(|v| !dom.contains(v))
                && c.domain.iter().chain(&c.range).all(|v| positive.contains(v));
            if !ok {
                return Err(AspError::BadChoice(rule.to_string()));
            }
        }
        Ok(rule)
    }

    pub fn fact(atom: Atom) -> Rule {
        Rule {
            head: Some(atom),
            body: Vec::new(),
            choice: None,
        }
    }

    pub fn positive_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().filter_map(|l| match l {
            Literal::Pos(a) => Some(a),
            _ => None,
        })
    }

    fn vars(&self) -> BTreeSet<Var> {
        vars_of(
            self.head
                .iter()
                .flat_map(|h| &h.args)
                .chain(self.body.iter().flat_map(Literal::terms)),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    /// Relations of the original target schema; cautious answers evaluate
    /// queries on the part of a model over these relations.
    pub target: Schema,
}

/// Ground facts given as input to a program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExtensionalDb {
    pub facts: Instance,
}

fn is_reserved(relation: &str) -> bool {
    relation == DOM || RESERVED_PREFIXES.iter().any(|p| relation.starts_with(p))
}

pub fn exchoice_relation(tgd_id: &str) -> String {
    format!("ExChoice_{tgd_id}")
}

/// The program of a setting and the extensional database of a source
/// instance over the budget constants.
pub fn translate_setting(
    setting: &Setting,
    source: &Instance,
    budget: &ConstantBudget,
) -> Result<(Program, ExtensionalDb), AspError> {
    for (r, _) in setting.source.iter().chain(setting.target.iter()) {
        if is_reserved(r) {
            return Err(AspError::ReservedName(r.to_string()));
        }
    }
    let mut rules = Vec::new();
    for tgd in setting.all_tgds() {
        let body: Vec<Literal> = tgd.body.iter().cloned().map(Literal::Pos).collect();
        if !tgd.has_existentials() {
            for b in &tgd.head {
                rules.push(Rule::new(Some(b.clone()), body.clone(), None)?);
            }
            continue;
        }
        let ex_args: Vec<Term> = tgd
            .frontier
            .iter()
            .chain(&tgd.existentials)
            .cloned()
            .map(Term::Var)
            .collect();
        let ex = Atom::new(exchoice_relation(&tgd.id), ex_args);
        let mut choice_body = body;
        choice_body.extend(
            tgd.existentials
                .iter()
                .map(|z| Literal::Pos(Atom::new(DOM, vec![Term::Var(z.clone())]))),
        );
        let choice = Choice {
            label: tgd.id.clone(),
            domain: tgd.frontier.clone(),
            range: tgd.existentials.clone(),
        };
        rules.push(Rule::new(Some(ex.clone()), choice_body, Some(choice))?);
        for b in &tgd.head {
            rules.push(Rule::new(Some(b.clone()), vec![Literal::Pos(ex.clone())], None)?);
        }
    }
    for egd in setting.egds() {
        let mut body: Vec<Literal> = egd.body.iter().cloned().map(Literal::Pos).collect();
        body.push(Literal::Neq(Term::Var(egd.lhs.clone()), Term::Var(egd.rhs.clone())));
        rules.push(Rule::new(None, body, None)?);
    }
    let mut facts: Instance = budget.all().map(|c| Atom::new(DOM, vec![Term::Const(c.clone())])).collect();
    facts.extend(source.iter().cloned());
    Ok((
        Program {
            rules,
            target: setting.target.clone(),
        },
        ExtensionalDb { facts },
    ))
}

/// A variable named after `base` that does not occur in `taken`.
fn unused_var(base: &str, taken: &BTreeSet<Var>) -> Var {
    let mut name = base.to_string();
    while taken.contains(&Var::new(&name)) {
        name.push('\'');
    }
    Var::new(name)
}

/// Rewrites a choice rule into plain rules with negation; other rules are
/// returned unchanged.
pub fn expand_choice(r: &Rule) -> Vec<Rule> {
    let Some(choice) = &r.choice else {
        return vec![r.clone()];
    };
    let head = r.head.clone();
    let label = &choice.label;
    let var_terms = |vs: &[Var]| -> Vec<Term> { vs.iter().cloned().map(Term::Var).collect() };
    let x = var_terms(&choice.domain);
    let y = var_terms(&choice.range);
    let mut taken = r.vars();
    let w: Vec<Var> = (1..=choice.range.len())
        .map(|i| {
            let v = unused_var(&format!("w{i}"), &taken);
            taken.insert(v.clone());
            v
        })
        .collect();
    let w = var_terms(&w);

    let range = Atom::new(format!("Range_{label}"), y.clone());
    let chosen = |ys: &[Term]| Atom::new(format!("Chosen_{label}"), [x.clone(), ys.to_vec()].concat());
    let diff = Atom::new(format!("DiffChoice_{label}"), [x.clone(), y.clone()].concat());

    let mut out = vec![
        Rule {
            head: Some(range.clone()),
            body: r.body.clone(),
            choice: None,
        },
        Rule {
            head,
            body: [r.body.clone(), vec![Literal::Pos(chosen(&y))]].concat(),
            choice: None,
        },
        Rule {
            head: Some(chosen(&y)),
            body: [r.body.clone(), vec![Literal::Neg(diff.clone())]].concat(),
            choice: None,
        },
    ];
    for i in 0..y.len() {
        out.push(Rule {
            head: Some(diff.clone()),
            body: vec![
                Literal::Pos(chosen(&w)),
                Literal::Pos(range.clone()),
                Literal::Neq(y[i].clone(), w[i].clone()),
            ],
            choice: None,
        });
    }
    out
}

impl Program {
    /// The same program with every choice rule expanded.
    pub fn expanded(&self) -> Program {
        Program {
            rules: self.rules.iter().flat_map(expand_choice).collect(),
            target: self.target.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cautious {
    Tuples(BTreeSet<Tuple>),
    NoModels,
}

/// Intersection of `q` over the target part of the given models.
pub fn cautious_over(models: &[Instance], target: &Schema, q: &Query) -> Cautious {
    let mut acc: Option<BTreeSet<Tuple>> = None;
    for m in models {
        let ans = evaluate(q, &m.restrict(target));
        acc = Some(match acc {
            None => ans,
            Some(prev) => prev.intersection(&ans).cloned().collect(),
        });
    }
    acc.map_or(Cautious::NoModels, Cautious::Tuples)
}

/// Tuples in the answers of `q` on every stable model.
pub fn cautious_answers(ed: &ExtensionalDb, q: &Query, p: &Program) -> Result<Cautious, AspError> {
    let models = stable_models(p, ed)?;
    Ok(cautious_over(&models, &p.target, q))
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => write!(f, "{a}"),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Eq(a, b) => write!(f, "{a} = {b}"),
            Literal::Neq(a, b) => write!(f, "{a} != {b}"),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(h) = &self.head {
            write!(f, "{h}")?;
        }
        if self.body.is_empty() && self.choice.is_none() {
            return write!(f, ".");
        }
        write!(f, " :- {}", join(&self.body))?;
        if let Some(c) = &self.choice {
            let sep = if self.body.is_empty() { "" } else { ", " };
            write!(f, "{sep}choice(({}),({}))", join(&c.domain), join(&c.range))?;
        }
        write!(f, ".")
    }
}

/// Facts of `models` restricted to `schema`, one instance per model.
pub fn target_restrictions(models: &[Instance], schema: &Schema) -> BTreeSet<Instance> {
    models.iter().map(|m| m.restrict(schema)).collect()
}

/// Checks that `Chosen_*` relations of a model are functional in their
/// domain columns. `arities` maps each choice label to its domain width.
pub fn choices_are_functional(model: &Instance, arities: &BTreeMap<String, usize>) -> bool {
    arities.iter().all(|(label, &k)| {
        let mut seen: BTreeMap<&[Term], &[Term]> = BTreeMap::new();
        model.facts_of(&format!("Chosen_{label}")).all(|f| {
            let (x, y) = f.args.split_at(k);
            *seen.entry(x).or_insert(y) == y
        })
    })
}
