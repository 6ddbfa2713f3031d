use std::collections::{BTreeMap, BTreeSet};

use super::{ExtensionalDb, Literal, Program, Rule};
use crate::model::{Atom, Const, Term};

/// Relation names as printed in program text. ASP grounders read
/// capitalized identifiers as variables, so relation names start lowercase.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NameTable {
    to_text: BTreeMap<String, String>,
    from_text: BTreeMap<String, String>,
}

impl NameTable {
    pub fn new<'a>(relations: impl IntoIterator<Item = &'a str>) -> Self {
        let mut table = NameTable::default();
        let sorted: BTreeSet<&str> = relations.into_iter().collect();
        for r in sorted {
            let mut chars = r.chars();
            let mut name: String = match chars.next() {
                Some(c) => c.to_lowercase().chain(chars).collect(),
                None => String::new(),
            };
            while table.from_text.contains_key(&name) {
                name.push('_');
            }
            table.to_text.insert(r.to_string(), name.clone());
            table.from_text.insert(name, r.to_string());
        }
        table
    }

    pub fn for_program(p: &Program, ed: &ExtensionalDb) -> Self {
        let mut rels: BTreeSet<String> = ed.facts.iter().map(|f| f.relation.to_string()).collect();
        for r in &p.rules {
            rels.extend(r.head.iter().map(|h| h.relation.to_string()));
            for l in &r.body {
                if let Literal::Pos(a) | Literal::Neg(a) = l {
                    rels.insert(a.relation.to_string());
                }
            }
        }
        rels.extend(p.target.iter().map(|(r, _)| r.to_string()));
        NameTable::new(rels.iter().map(String::as_str))
    }

    pub fn text_name<'a>(&'a self, relation: &'a str) -> &'a str {
        self.to_text.get(relation).map_or(relation, String::as_str)
    }

    pub fn relation(&self, text: &str) -> Option<&str> {
        self.from_text.get(text).map(String::as_str)
    }
}

fn constant_text(c: &Const) -> String {
    let s = c.name();
    let mut chars = s.chars();
    let identifier = matches!(chars.next(), Some('a'..='z')) && chars.all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
    let number = !s.is_empty() && s.chars().all(|ch| ch.is_ascii_digit()) && (s == "0" || !s.starts_with('0'));
    if identifier || number {
        return s.to_string();
    }
    let mut out = String::from("\"");
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out.push('"');
    out
}

fn term_text(t: &Term) -> String {
    match t {
        Term::Const(c) => constant_text(c),
        Term::Var(v) => {
            let mut chars = v.name().chars();
            chars.next().map_or_else(String::new, |c| c.to_uppercase().chain(chars).collect())
        }
        Term::Null(n) => format!("\"{n}\""),
    }
}

fn atom_text(a: &Atom, names: &NameTable) -> String {
    let name = names.text_name(&a.relation);
    let args: Vec<String> = a.args.iter().map(term_text).collect();
    format!("{name}({})", args.join(","))
}

fn literal_text(l: &Literal, names: &NameTable) -> String {
    match l {
        Literal::Pos(a) => atom_text(a, names),
        Literal::Neg(a) => format!("not {}", atom_text(a, names)),
        Literal::Eq(a, b) => format!("{} = {}", term_text(a), term_text(b)),
        Literal::Neq(a, b) => format!("{} != {}", term_text(a), term_text(b)),
    }
}

fn body_text(r: &Rule, names: &NameTable) -> String {
    let mut parts: Vec<String> = r.body.iter().map(|l| literal_text(l, names)).collect();
    if let Some(c) = &r.choice {
        let vars = |vs: &[crate::model::Var]| {
            vs.iter()
                .map(|v| term_text(&Term::Var(v.clone())))
                .collect::<Vec<_>>()
                .join(",")
        };
        parts.push(format!("choice(({}),({}))", vars(&c.domain), vars(&c.range)));
    }
    parts.join(", ")
}

/// Program text, one rule per line: rules sorted by head relation and body
/// text, then the extensional facts in sorted order. Choice rules that are
/// not expanded print with a trailing `choice((X),(Y))` literal.
pub fn emit_program_text(p: &Program, ed: &ExtensionalDb) -> String {
    let names = NameTable::for_program(p, ed);
    let mut lines: Vec<(String, String, String)> = p
        .rules
        .iter()
        .map(|r| {
            let head = r.head.as_ref().map(|h| atom_text(h, &names)).unwrap_or_default();
            let relation = r.head.as_ref().map(|h| h.relation.to_string()).unwrap_or_default();
            let body = body_text(r, &names);
            let line = if body.is_empty() {
                format!("{head}.")
            } else if head.is_empty() {
                format!(":- {body}.")
            } else {
                format!("{head} :- {body}.")
            };
            (relation, body, line)
        })
        .collect();
    lines.sort();
    lines.dedup();
    let mut facts: Vec<String> = ed.facts.iter().map(|f| format!("{}.", atom_text(f, &names))).collect();
    facts.sort();
    let mut out = String::new();
    for (_, _, line) in lines {
        out.push_str(&line);
        out.push('\n');
    }
    if !out.is_empty() && !facts.is_empty() {
        out.push('\n');
    }
    for f in facts {
        out.push_str(&f);
        out.push('\n');
    }
    out
}
