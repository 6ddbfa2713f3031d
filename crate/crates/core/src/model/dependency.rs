use std::collections::BTreeSet;
use std::fmt;

use super::atom::{Atom, Schema};
use super::term::{Const, Var};
use super::ModelError;

/// A tuple-generating dependency `body -> exists z. head`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Tgd {
    pub id: String,
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
    /// Head variables not occurring in the body, in order of first head occurrence.
    pub existentials: Vec<Var>,
    /// Variables shared by body and head, in order of first head occurrence.
    pub frontier: Vec<Var>,
}

impl Tgd {
    pub fn new(id: impl Into<String>, body: Vec<Atom>, head: Vec<Atom>) -> Result<Self, ModelError> {
        let id = id.into();
        if body.is_empty() {
            return Err(ModelError::EmptyBody(id));
        }
        if head.is_empty() {
            return Err(ModelError::EmptyHead(id));
        }
        if body.iter().chain(&head).any(Atom::has_null) {
            return Err(ModelError::NullInDependency(id));
        }
        let body_vars: BTreeSet<&Var> = body.iter().flat_map(Atom::vars).collect();
        let mut frontier = Vec::new();
        let mut existentials = Vec::new();
        for v in head.iter().flat_map(Atom::vars) {
            let bucket = if body_vars.contains(v) {
                &mut frontier
            } else {
                &mut existentials
            };
            if !bucket.contains(v) {
                bucket.push(v.clone());
            }
        }
        Ok(Tgd {
            id,
            body,
            head,
            existentials,
            frontier,
        })
    }

    pub fn has_existentials(&self) -> bool {
        !self.existentials.is_empty()
    }

    pub fn body_vars(&self) -> BTreeSet<Var> {
        self.body.iter().flat_map(Atom::vars).cloned().collect()
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        self.body
            .iter()
            .chain(&self.head)
            .flat_map(Atom::constants)
            .cloned()
            .collect()
    }
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_conj(f, &self.body)?;
        f.write_str(" -> ")?;
        if !self.existentials.is_empty() {
            f.write_str("exists ")?;
            for (i, v) in self.existentials.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str(". ")?;
        }
        write_conj(f, &self.head)
    }
}

impl fmt::Debug for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self)
    }
}

/// An equality-generating dependency `body -> lhs = rhs`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Egd {
    pub id: String,
    pub body: Vec<Atom>,
    pub lhs: Var,
    pub rhs: Var,
}

impl Egd {
    pub fn new(id: impl Into<String>, body: Vec<Atom>, lhs: Var, rhs: Var) -> Result<Self, ModelError> {
        let id = id.into();
        if body.is_empty() {
            return Err(ModelError::EmptyBody(id));
        }
        if body.iter().any(Atom::has_null) {
            return Err(ModelError::NullInDependency(id));
        }
        let vars: BTreeSet<&Var> = body.iter().flat_map(Atom::vars).collect();
        for v in [&lhs, &rhs] {
            if !vars.contains(v) {
                return Err(ModelError::UnboundEqualityVar {
                    dependency: id,
                    var: v.to_string(),
                });
            }
        }
        Ok(Egd { id, body, lhs, rhs })
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        self.body.iter().flat_map(Atom::constants).cloned().collect()
    }
}

impl fmt::Display for Egd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_conj(f, &self.body)?;
        write!(f, " -> {} = {}", self.lhs, self.rhs)
    }
}

impl fmt::Debug for Egd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.id, self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Dependency {
    Tgd(Tgd),
    Egd(Egd),
}

impl Dependency {
    pub fn id(&self) -> &str {
        match self {
            Dependency::Tgd(t) => &t.id,
            Dependency::Egd(e) => &e.id,
        }
    }

    pub fn body(&self) -> &[Atom] {
        match self {
            Dependency::Tgd(t) => &t.body,
            Dependency::Egd(e) => &e.body,
        }
    }
}

impl fmt::Display for Dependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dependency::Tgd(t) => write!(f, "{t}"),
            Dependency::Egd(e) => write!(f, "{e}"),
        }
    }
}

fn write_conj(f: &mut fmt::Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

/// A data exchange setting: source and target schemas, source-to-target
/// TGDs and target dependencies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Setting {
    pub source: Schema,
    pub target: Schema,
    pub st_tgds: Vec<Tgd>,
    pub t_deps: Vec<Dependency>,
}

impl Setting {
    /// Builds a setting and checks the schema invariants.
    pub fn new(
        source: Schema,
        target: Schema,
        st_tgds: Vec<Tgd>,
        t_deps: Vec<Dependency>,
    ) -> Result<Self, ModelError> {
        let setting = Setting {
            source,
            target,
            st_tgds,
            t_deps,
        };
        setting.validate()?;
        Ok(setting)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if let Some((r, _)) = self.source.iter().find(|(r, _)| self.target.contains(r)) {
            return Err(ModelError::SchemaOverlap(r.to_string()));
        }
        let mut ids = BTreeSet::new();
        for t in &self.st_tgds {
            for a in &t.body {
                self.source.check_atom(a)?;
            }
            for a in &t.head {
                self.target.check_atom(a)?;
            }
            if !ids.insert(t.id.as_str()) {
                return Err(ModelError::DuplicateId(t.id.clone()));
            }
        }
        for d in &self.t_deps {
            let atoms: Box<dyn Iterator<Item = &Atom>> = match d {
                Dependency::Tgd(t) => Box::new(t.body.iter().chain(&t.head)),
                Dependency::Egd(e) => Box::new(e.body.iter()),
            };
            for a in atoms {
                self.target.check_atom(a)?;
            }
            if !ids.insert(d.id()) {
                return Err(ModelError::DuplicateId(d.id().to_string()));
            }
        }
        Ok(())
    }

    pub fn t_tgds(&self) -> impl Iterator<Item = &Tgd> {
        self.t_deps.iter().filter_map(|d| match d {
            Dependency::Tgd(t) => Some(t),
            Dependency::Egd(_) => None,
        })
    }

    pub fn egds(&self) -> impl Iterator<Item = &Egd> {
        self.t_deps.iter().filter_map(|d| match d {
            Dependency::Egd(e) => Some(e),
            Dependency::Tgd(_) => None,
        })
    }

    /// Source-to-target TGDs followed by target TGDs.
    pub fn all_tgds(&self) -> impl Iterator<Item = &Tgd> {
        self.st_tgds.iter().chain(self.t_tgds())
    }

    pub fn is_tgd_only(&self) -> bool {
        self.egds().next().is_none()
    }

    /// The same setting with all EGDs removed.
    pub fn without_egds(&self) -> Setting {
        Setting {
            source: self.source.clone(),
            target: self.target.clone(),
            st_tgds: self.st_tgds.clone(),
            t_deps: self
                .t_deps
                .iter()
                .filter(|d| matches!(d, Dependency::Tgd(_)))
                .cloned()
                .collect(),
        }
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        let mut out: BTreeSet<Const> = self.all_tgds().flat_map(|t| t.constants()).collect();
        out.extend(self.egds().flat_map(|e| e.constants()));
        out
    }

    pub fn max_existential_arity(&self) -> usize {
        self.all_tgds().map(|t| t.existentials.len()).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Term;

    fn atom(r: &str, args: &[&str]) -> Atom {
        Atom::new(
            r,
            args.iter()
                .map(|a| {
                    if a.starts_with(|c: char| c.is_ascii_lowercase()) {
                        Term::var(a)
                    } else {
                        Term::constant(a)
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn frontier_and_existentials() {
        let t = Tgd::new(
            "r",
            vec![atom("T", &["x", "y"])],
            vec![atom("T", &["y", "z"]), atom("U", &["z", "x"])],
        )
        .unwrap();
        assert_eq!(t.frontier, vec![Var::new("y"), Var::new("x")]);
        assert_eq!(t.existentials, vec![Var::new("z")]);
    }

    #[test]
    fn rejects_empty_body_and_nulls() {
        assert!(matches!(
            Tgd::new("r", vec![], vec![atom("T", &["A"])]),
            Err(ModelError::EmptyBody(_))
        ));
        let with_null = Atom::new("T", vec![Term::null(1)]);
        assert!(matches!(
            Tgd::new("r", vec![with_null], vec![atom("T", &["A"])]),
            Err(ModelError::NullInDependency(_))
        ));
    }

    #[test]
    fn egd_sides_must_be_bound() {
        assert!(Egd::new("e", vec![atom("R", &["x", "y"])], Var::new("x"), Var::new("z")).is_err());
        assert!(Egd::new("e", vec![atom("R", &["x", "y"])], Var::new("x"), Var::new("y")).is_ok());
    }

    #[test]
    fn overlapping_schemas_rejected() {
        let s = Schema::from_pairs([("R", 1)]);
        assert!(matches!(
            Setting::new(s.clone(), s, vec![], vec![]),
            Err(ModelError::SchemaOverlap(_))
        ));
    }
}
