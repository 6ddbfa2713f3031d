//! Random small settings, instances and queries for the oracle tests.
//! `DEX_SEED` fixes the base seed.

#![allow(dead_code)]

use dex_core::analysis::is_weakly_acyclic;
use dex_core::enumerate::default_fresh_count;
use dex_core::model::{Instance, Schema, Setting};
use dex_core::query::Query;
use dex_core::syntax::{parse_instance, parse_query, parse_setting, SourceText};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn base_seed() -> u64 {
    std::env::var("DEX_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0x00de_5eed)
}

pub fn rng_for(stream: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base_seed() ^ (stream << 32) ^ trial)
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub egds: bool,
    pub t_tgds: bool,
    /// Upper bound on the fresh constants any solution may need.
    pub max_fresh: usize,
}

pub struct Case {
    pub text: String,
    pub facts: String,
    pub setting: Setting,
    pub source: Instance,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}\n--- facts\n{}", self.text, self.facts)
    }
}

const FACT_CONSTS: [&str; 3] = ["\"a\"", "\"b\"", "\"c\""];
const DEP_CONSTS: [&str; 2] = ["\"a\"", "\"d\""];
const VARS: [&str; 3] = ["x", "y", "z"];

/// An atom over a random relation of `rels`.
fn atom_text(rng: &mut ChaCha8Rng, rels: &[(String, usize)], vars: &[&str], consts: &[&str], p_const: f64) -> String {
    let rel = rels.choose(rng).unwrap();
    let args: Vec<&str> = (0..rel.1)
        .map(|_| {
            if rng.gen_bool(p_const) {
                *consts.choose(rng).unwrap()
            } else {
                *vars.choose(rng).unwrap()
            }
        })
        .collect();
    format!("{}({})", rel.0, args.join(","))
}

fn vars_of(atoms: &[String]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for a in atoms {
        let inner = &a[a.find('(').unwrap() + 1..a.len() - 1];
        for t in inner.split(',') {
            if !t.starts_with('"') && !t.is_empty() && !out.iter().any(|v| v == t) {
                out.push(t.to_string());
            }
        }
    }
    out
}

fn tgd_text(rng: &mut ChaCha8Rng, body_rels: &[(String, usize)], head_rels: &[(String, usize)]) -> String {
    let n = rng.gen_range(1..=2);
    let body: Vec<String> = (0..n)
        .map(|_| atom_text(rng, body_rels, &VARS, &DEP_CONSTS, 0.15))
        .collect();
    let vars = vars_of(&body);
    let head_rel = head_rels.choose(rng).unwrap();
    let mut existential = false;
    let args: Vec<String> = (0..head_rel.1)
        .map(|_| {
            if vars.is_empty() || rng.gen_bool(0.3) {
                existential = true;
                "w".to_string()
            } else {
                vars.choose(rng).unwrap().clone()
            }
        })
        .collect();
    let head = format!("{}({})", head_rel.0, args.join(","));
    let ex = if existential { "exists w. " } else { "" };
    format!("{} -> {ex}{head}", body.join(", "))
}

fn egd_text(rng: &mut ChaCha8Rng, rels: &[(String, usize)]) -> Option<String> {
    let n = rng.gen_range(1..=2);
    let body: Vec<String> = (0..n)
        .map(|_| atom_text(rng, rels, &VARS, &DEP_CONSTS, 0.1))
        .collect();
    let mut vars = vars_of(&body);
    if vars.len() < 2 {
        return None;
    }
    vars.shuffle(rng);
    Some(format!("{} -> {} = {}", body.join(", "), vars[0], vars[1]))
}

fn schema_text(rels: &[(String, usize)]) -> String {
    rels.iter().map(|(r, n)| format!("{r}/{n}")).collect::<Vec<_>>().join(", ")
}

/// A weakly acyclic setting with at most three relations of arity at most
/// two, at most three dependencies and one to four source facts.
pub fn random_case(rng: &mut ChaCha8Rng, shape: Shape) -> Case {
    loop {
        let n_src = rng.gen_range(1..=2);
        let n_tgt = rng.gen_range(1..=3 - n_src);
        let src: Vec<(String, usize)> = (1..=n_src).map(|i| (format!("S{i}"), rng.gen_range(1..=2))).collect();
        let tgt: Vec<(String, usize)> = (1..=n_tgt).map(|i| (format!("T{i}"), rng.gen_range(1..=2))).collect();
        let n_deps = rng.gen_range(1..=3);
        let mut deps = vec![format!("st: {}.", tgd_text(rng, &src, &tgt))];
        while deps.len() < n_deps {
            let kind = rng.gen_range(0..3);
            if kind == 0 {
                deps.push(format!("st: {}.", tgd_text(rng, &src, &tgt)));
            } else if kind == 1 && shape.t_tgds {
                deps.push(format!("t: {}.", tgd_text(rng, &tgt, &tgt)));
            } else if kind == 2 && shape.egds {
                if let Some(e) = egd_text(rng, &tgt) {
                    deps.push(format!("t: {e}."));
                }
            } else {
                break;
            }
        }
        let text = format!("source {}.\ntarget {}.\n{}\n", schema_text(&src), schema_text(&tgt), deps.join("\n"));
        let Ok(setting) = parse_setting(&SourceText::from(text.as_str())) else {
            continue;
        };
        if !is_weakly_acyclic(&setting) {
            continue;
        }
        let n_facts = rng.gen_range(1..=4);
        let facts: Vec<String> = (0..n_facts)
            .map(|_| format!("{}.", atom_text(rng, &src, &[], &FACT_CONSTS, 1.0)))
            .collect();
        let facts = facts.join(" ");
        let source = parse_instance(&SourceText::from(facts.as_str()), &setting.source).unwrap();
        match default_fresh_count(&setting, &source) {
            Ok(m) if m <= shape.max_fresh => {}
            _ => continue,
        }
        return Case {
            text,
            facts,
            setting,
            source,
        };
    }
}

fn relations(schema: &Schema) -> Vec<(String, usize)> {
    schema.iter().map(|(r, n)| (r.to_string(), n)).collect()
}

const QUERY_VARS: [&str; 3] = ["x", "y", "u"];
const QUERY_CONSTS: [&str; 2] = ["\"a\"", "\"b\""];

fn conjunction(rng: &mut ChaCha8Rng, rels: &[(String, usize)]) -> Vec<String> {
    let n = rng.gen_range(1..=2);
    (0..n)
        .map(|_| atom_text(rng, rels, &QUERY_VARS, &QUERY_CONSTS, 0.15))
        .collect()
}

fn closed_over(atoms: &[String], head: &[String], extra: &[String]) -> String {
    let vars = vars_of(atoms);
    let bound: Vec<&String> = vars.iter().filter(|v| !head.contains(v)).collect();
    let mut parts: Vec<String> = atoms.to_vec();
    parts.extend(extra.iter().cloned());
    let body = parts.join(" & ");
    if bound.is_empty() {
        format!("({body})")
    } else {
        let names: Vec<&str> = bound.iter().map(|s| s.as_str()).collect();
        format!("(exists {}. {body})", names.join(", "))
    }
}

/// A random conjunctive query, a union of two, or (unless `positive`) a
/// query with negation, inequality or universal quantification.
pub fn random_query(rng: &mut ChaCha8Rng, schema: &Schema, positive: bool) -> Query {
    let rels = relations(schema);
    loop {
        let first = conjunction(rng, &rels);
        let vars = vars_of(&first);
        let k = rng.gen_range(0..=vars.len().min(2));
        let mut head: Vec<String> = vars.clone();
        head.shuffle(rng);
        head.truncate(k);
        let mut extra = Vec::new();
        if !positive && rng.gen_bool(0.6) {
            match rng.gen_range(0..3) {
                0 => {
                    let pool: Vec<&str> = if vars.is_empty() {
                        QUERY_CONSTS.to_vec()
                    } else {
                        vars.iter().map(String::as_str).collect()
                    };
                    let a = atom_text(rng, &rels, &pool, &QUERY_CONSTS, 0.2);
                    extra.push(format!("!{a}"));
                }
                1 if vars.len() >= 2 => extra.push(format!("{} != {}", vars[0], vars[1])),
                1 => extra.push(format!("{} != \"a\"", vars.first().map_or("\"b\"", |v| v.as_str()))),
                _ => {
                    let rel = rels.choose(rng).unwrap();
                    let args: Vec<String> = (0..rel.1)
                        .map(|i| if i == 0 { "v".to_string() } else { vars.choose(rng).cloned().unwrap_or("v".into()) })
                        .collect();
                    extra.push(format!("(forall v. !{}({}) | v = \"a\")", rel.0, args.join(",")));
                }
            }
        }
        let mut disjuncts = vec![closed_over(&first, &head, &extra)];
        if rng.gen_bool(0.3) {
            let second = conjunction(rng, &rels);
            if head.iter().all(|h| vars_of(&second).contains(h)) {
                disjuncts.push(closed_over(&second, &head, &[]));
            }
        }
        let text = format!("Q({}) := {}.", head.join(","), disjuncts.join(" | "));
        if let Ok(q) = parse_query(&SourceText::from(text.as_str()), schema) {
            return q;
        }
    }
}

/// Up to five random facts over `schema` with constants a, b, c.
pub fn random_instance(rng: &mut ChaCha8Rng, schema: &Schema) -> Instance {
    let rels = relations(schema);
    let n = rng.gen_range(0..=5);
    let facts: Vec<String> = (0..n)
        .map(|_| format!("{}.", atom_text(rng, &rels, &[], &FACT_CONSTS, 1.0)))
        .collect();
    parse_instance(&SourceText::from(facts.join(" ").as_str()), schema).unwrap()
}
