//! The textual format for settings (`.dex`), instances (`.facts`) and
//! queries (`.query`).
//!
//! ```text
//! setting := decl* dep*
//! decl    := ("source" | "target") IDENT "/" NAT ("," IDENT "/" NAT)* "."
//! dep     := ("st:" | "t:") conj "->" ("exists" vars ".")? (conj | term "=" term) "."
//! fact    := IDENT "(" const ("," const)* ")" "."
//! query   := IDENT "(" vars? ")" ":=" formula "."
//! ```
//!
//! Lowercase identifiers are variables; constants are quoted strings or
//! naturals. `%` starts a line comment.

mod lexer;

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{Atom, Dependency, Egd, Instance, ModelError, Schema, Setting, Term, Tgd, Var};
use crate::query::{Formula, Query};
use lexer::{tokenize, Spanned, Tok};

/// Input text together with where it came from.
#[derive(Clone, Debug)]
pub struct SourceText {
    pub text: String,
    pub origin: String,
}

impl SourceText {
    pub fn new(text: impl Into<String>, origin: impl Into<String>) -> Self {
        SourceText {
            text: text.into(),
            origin: origin.into(),
        }
    }
}

impl From<&str> for SourceText {
    fn from(text: &str) -> Self {
        SourceText::new(text, "<string>")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Option<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if let Some(e) = &self.expected {
            write!(f, " (expected {e})")?;
        }
        Ok(())
    }
}

/// A value with the line and column where it starts.
type Located<T> = (T, (usize, usize));

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(src: &SourceText) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: tokenize(&src.text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, (line, column): (usize, usize), message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            column,
            message: message.into(),
            expected: None,
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        ParseError {
            expected: Some(expected.to_string()),
            ..self.error_at(self.here(), format!("unexpected {}", self.peek().describe()))
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn nat(&mut self) -> Result<usize, ParseError> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Nat(s) => {
                self.bump();
                s.parse().map_err(|_| self.error_at(at, "number too large"))
            }
            _ => Err(self.unexpected("number")),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Nat(s) | Tok::Str(s) => {
                self.bump();
                Ok(Term::constant(s))
            }
            Tok::Ident(s) => {
                if s.starts_with('_') {
                    return Err(self.error_at(at, format!("labeled null `{s}` is not allowed here")));
                }
                if !s.starts_with(|c: char| c.is_ascii_lowercase()) {
                    return Err(self.error_at(
                        at,
                        format!("`{s}` is not a variable; constants must be quoted or numeric"),
                    ));
                }
                self.bump();
                Ok(Term::var(s))
            }
            _ => Err(self.unexpected("term")),
        }
    }

    fn var(&mut self) -> Result<Var, ParseError> {
        let at = self.here();
        match self.term()? {
            Term::Var(v) => Ok(v),
            _ => Err(self.error_at(at, "expected a variable")),
        }
    }

    fn var_list(&mut self) -> Result<Vec<Var>, ParseError> {
        let mut vars = vec![self.var()?];
        while self.eat(&Tok::Comma) {
            vars.push(self.var()?);
        }
        Ok(vars)
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let rel = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(Atom::new(rel, args))
    }

    fn located_atom(&mut self) -> Result<(Atom, (usize, usize)), ParseError> {
        let at = self.here();
        Ok((self.atom()?, at))
    }

    fn conj(&mut self) -> Result<Vec<Located<Atom>>, ParseError> {
        let mut atoms = vec![self.located_atom()?];
        while self.eat(&Tok::Comma) {
            atoms.push(self.located_atom()?);
        }
        Ok(atoms)
    }
}

fn model_error(at: (usize, usize), e: ModelError) -> ParseError {
    ParseError {
        line: at.0,
        column: at.1,
        message: e.to_string(),
        expected: None,
    }
}

fn check_atoms(schema: &Schema, atoms: &[(Atom, (usize, usize))]) -> Result<(), ParseError> {
    for (a, at) in atoms {
        schema.check_atom(a).map_err(|e| model_error(*at, e))?;
    }
    Ok(())
}

pub fn parse_setting(src: &SourceText) -> Result<Setting, ParseError> {
    let mut p = Parser::new(src)?;
    let mut source = Schema::new();
    let mut target = Schema::new();
    let mut st_tgds = Vec::new();
    let mut t_deps = Vec::new();

    while let Tok::Ident(kw) = p.peek().clone() {
        if kw != "source" && kw != "target" {
            break;
        }
        p.bump();
        loop {
            let at = p.here();
            let rel = p.ident()?;
            p.expect(Tok::Slash)?;
            let arity_at = p.here();
            let arity = p.nat()?;
            if arity == 0 {
                return Err(p.error_at(arity_at, "relations must have arity at least 1"));
            }
            if source.contains(&rel) || target.contains(&rel) {
                let msg = if (kw == "source") == source.contains(&rel) {
                    format!("relation {rel} is declared twice")
                } else {
                    ModelError::SchemaOverlap(rel).to_string()
                };
                return Err(p.error_at(at, msg));
            }
            let schema = if kw == "source" { &mut source } else { &mut target };
            schema.insert(&rel, arity);
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        p.expect(Tok::Dot)?;
    }

    while *p.peek() != Tok::Eof {
        let at = p.here();
        let kind = match p.peek() {
            Tok::Ident(s) if (s == "st" || s == "t") && *p.peek_at(1) == Tok::Colon => s.clone(),
            Tok::Ident(s) if s == "source" || s == "target" => {
                return Err(p.error_at(at, "declarations must precede dependencies"));
            }
            _ => return Err(p.unexpected("`st:` or `t:`")),
        };
        p.bump();
        p.bump();
        let body = p.conj()?;
        p.expect(Tok::Arrow)?;
        let body_schema = if kind == "st" { &source } else { &target };
        check_atoms(body_schema, &body)?;
        let body_vars: BTreeSet<Var> = body.iter().flat_map(|(a, _)| a.vars().cloned()).collect();
        let id = if kind == "st" {
            format!("st{}", st_tgds.len() + 1)
        } else {
            format!("t{}", t_deps.len() + 1)
        };
        let body_atoms: Vec<Atom> = body.into_iter().map(|(a, _)| a).collect();

        let mut declared = Vec::new();
        let exists_at = p.here();
        if matches!(p.peek(), Tok::Ident(s) if s == "exists") {
            p.bump();
            declared = p.var_list()?;
            p.expect(Tok::Dot)?;
        }
        let is_egd = !matches!(p.peek_at(1), Tok::LParen);
        if is_egd {
            let eq_at = p.here();
            let lhs = p.term()?;
            p.expect(Tok::Eq)?;
            let rhs = p.term()?;
            p.expect(Tok::Dot)?;
            if kind == "st" {
                return Err(p.error_at(eq_at, "equalities are only allowed in target dependencies"));
            }
            if !declared.is_empty() {
                return Err(p.error_at(exists_at, "an equality head cannot have existential variables"));
            }
            let (Term::Var(l), Term::Var(r)) = (lhs, rhs) else {
                return Err(p.error_at(eq_at, "both sides of an equality must be variables"));
            };
            let egd = Egd::new(id, body_atoms, l, r).map_err(|e| model_error(eq_at, e))?;
            t_deps.push(Dependency::Egd(egd));
            continue;
        }
        let head = p.conj()?;
        p.expect(Tok::Dot)?;
        check_atoms(&target, &head)?;
        let mut seen = BTreeSet::new();
        for z in &declared {
            if !seen.insert(z.clone()) {
                return Err(p.error_at(exists_at, format!("existential variable {z} is listed twice")));
            }
            if body_vars.contains(z) {
                return Err(p.error_at(exists_at, format!("existential variable {z} occurs in the body")));
            }
        }
        let head_vars: BTreeSet<Var> = head.iter().flat_map(|(a, _)| a.vars().cloned()).collect();
        for (a, hat) in &head {
            for v in a.vars() {
                if !body_vars.contains(v) && !seen.contains(v) {
                    return Err(p.error_at(
                        *hat,
                        format!("head variable {v} is neither in the body nor declared with `exists`"),
                    ));
                }
            }
        }
        if let Some(z) = declared.iter().find(|z| !head_vars.contains(*z)) {
            return Err(p.error_at(exists_at, format!("existential variable {z} does not occur in the head")));
        }
        let tgd = Tgd::new(id, body_atoms, head.into_iter().map(|(a, _)| a).collect())
            .map_err(|e| model_error(at, e))?;
        if kind == "st" {
            st_tgds.push(tgd);
        } else {
            t_deps.push(Dependency::Tgd(tgd));
        }
    }
    Setting::new(source, target, st_tgds, t_deps).map_err(|e| model_error((1, 1), e))
}

/// Parses a list of facts over `schema`. Facts may only contain constants.
pub fn parse_instance(src: &SourceText, schema: &Schema) -> Result<Instance, ParseError> {
    let mut p = Parser::new(src)?;
    let mut inst = Instance::new();
    while *p.peek() != Tok::Eof {
        let at = p.here();
        let rel = p.ident()?;
        p.expect(Tok::LParen)?;
        let mut args = Vec::new();
        loop {
            let targ = p.here();
            match p.peek().clone() {
                Tok::Nat(s) | Tok::Str(s) => {
                    p.bump();
                    args.push(Term::constant(s));
                }
                Tok::Ident(s) => {
                    return Err(p.error_at(
                        targ,
                        format!("`{s}` is not a constant; facts contain quoted strings or numbers only"),
                    ));
                }
                _ => return Err(p.unexpected("constant")),
            }
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
        p.expect(Tok::RParen)?;
        p.expect(Tok::Dot)?;
        let atom = Atom::new(rel, args);
        schema.check_atom(&atom).map_err(|e| model_error(at, e))?;
        inst.insert(atom);
    }
    Ok(inst)
}

/// Parses `Q(x1,...,xk) := formula.`; relations are checked against `schema`.
pub fn parse_query(src: &SourceText, schema: &Schema) -> Result<Query, ParseError> {
    let mut p = Parser::new(src)?;
    let start = p.here();
    let name = p.ident()?;
    p.expect(Tok::LParen)?;
    let head = if *p.peek() == Tok::RParen {
        Vec::new()
    } else {
        p.var_list()?
    };
    p.expect(Tok::RParen)?;
    p.expect(Tok::Define)?;
    let formula = formula(&mut p, schema)?;
    p.expect(Tok::Dot)?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Query::new(name, head, formula).map_err(|e| p.error_at(start, e.to_string()))
}

/// Parses a bare formula (no head, no trailing dot).
pub fn parse_formula(src: &SourceText, schema: &Schema) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = formula(&mut p, schema)?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

// formula := quant | iff
// iff     := imp ("<->" imp)?
// imp     := or ("->" imp)?
// or      := and ("|" and)*
// and     := unary ("&" unary)*
// unary   := "!" unary | quant | primary
// quant   := ("exists" | "forall") vars "." formula
fn formula(p: &mut Parser, schema: &Schema) -> Result<Formula, ParseError> {
    let lhs = implication(p, schema)?;
    if p.eat(&Tok::BiArrow) {
        let rhs = implication(p, schema)?;
        return Ok(Formula::and(vec![
            Formula::implies(lhs.clone(), rhs.clone()),
            Formula::implies(rhs, lhs),
        ]));
    }
    Ok(lhs)
}

fn implication(p: &mut Parser, schema: &Schema) -> Result<Formula, ParseError> {
    let lhs = disjunction(p, schema)?;
    if p.eat(&Tok::Arrow) {
        let rhs = implication(p, schema)?;
        return Ok(Formula::implies(lhs, rhs));
    }
    Ok(lhs)
}

fn disjunction(p: &mut Parser, schema: &Schema) -> Result<Formula, ParseError> {
    let mut parts = vec![conjunction(p, schema)?];
    while p.eat(&Tok::Bar) {
        parts.push(conjunction(p, schema)?);
    }
    Ok(Formula::or(parts))
}

fn conjunction(p: &mut Parser, schema: &Schema) -> Result<Formula, ParseError> {
    let mut parts = vec![unary(p, schema)?];
    while p.eat(&Tok::Amp) {
        parts.push(unary(p, schema)?);
    }
    Ok(Formula::and(parts))
}

fn unary(p: &mut Parser, schema: &Schema) -> Result<Formula, ParseError> {
    if p.eat(&Tok::Bang) {
        return Ok(Formula::not(unary(p, schema)?));
    }
    if let Tok::Ident(kw) = p.peek().clone() {
        if kw == "exists" || kw == "forall" {
            p.bump();
            let vars = p.var_list()?;
            p.expect(Tok::Dot)?;
            let body = formula(p, schema)?;
            return Ok(if kw == "exists" {
                Formula::exists_many(vars, body)
            } else {
                Formula::forall_many(vars, body)
            });
        }
    }
    primary(p, schema)
}

fn primary(p: &mut Parser, schema: &Schema) -> Result<Formula, ParseError> {
    let at = p.here();
    match p.peek().clone() {
        Tok::LParen => {
            p.bump();
            let f = formula(p, schema)?;
            p.expect(Tok::RParen)?;
            Ok(f)
        }
        Tok::Ident(s) if s == "true" && *p.peek_at(1) != Tok::LParen => {
            p.bump();
            Ok(Formula::truth())
        }
        Tok::Ident(s) if s == "false" && *p.peek_at(1) != Tok::LParen => {
            p.bump();
            Ok(Formula::falsity())
        }
        Tok::Ident(_) if *p.peek_at(1) == Tok::LParen => {
            let a = p.atom()?;
            schema.check_atom(&a).map_err(|e| model_error(at, e))?;
            Ok(Formula::Atom(a))
        }
        Tok::Ident(_) | Tok::Nat(_) | Tok::Str(_) => {
            let lhs = p.term()?;
            let negated = match p.peek() {
                Tok::Eq => false,
                Tok::Neq => true,
                _ => return Err(p.unexpected("`=` or `!=`")),
            };
            p.bump();
            let rhs = p.term()?;
            let eq = Formula::Eq(lhs, rhs);
            Ok(if negated { Formula::not(eq) } else { eq })
        }
        _ => Err(p.unexpected("formula")),
    }
}

/// Prints a setting in the `.dex` format.
pub fn print_setting(s: &Setting) -> String {
    let mut out = String::new();
    for (kw, schema) in [("source", &s.source), ("target", &s.target)] {
        if schema.is_empty() {
            continue;
        }
        let sigs: Vec<String> = schema.iter().map(|(r, n)| format!("{r}/{n}")).collect();
        out.push_str(&format!("{kw} {}.\n", sigs.join(", ")));
    }
    for t in &s.st_tgds {
        out.push_str(&format!("st: {t}.\n"));
    }
    for d in &s.t_deps {
        out.push_str(&format!("t: {d}.\n"));
    }
    out
}

/// Prints an instance in the `.facts` format.
pub fn print_instance(i: &Instance) -> String {
    i.to_string()
}

/// Prints a query in the `.query` format.
pub fn print_query(q: &Query) -> String {
    format!("{q}\n")
}
