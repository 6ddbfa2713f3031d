use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Bound;
use std::sync::Arc;

use super::term::{Const, NullId, Term, Var};
use super::ModelError;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub relation: Arc<str>,
    pub args: Vec<Term>,
}

/// A variable-free atom. Nulls are allowed.
pub type Fact = Atom;

impl Atom {
    pub fn new(relation: impl AsRef<str>, args: Vec<Term>) -> Self {
        Atom {
            relation: Arc::from(relation.as_ref()),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_var)
    }

    pub fn has_null(&self) -> bool {
        self.args.iter().any(Term::is_null)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn constants(&self) -> impl Iterator<Item = &Const> {
        self.args.iter().filter_map(Term::as_const)
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Atom {
        Atom {
            relation: self.relation.clone(),
            args: self.args.iter().map(&mut f).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Relation name to arity.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    relations: BTreeMap<Arc<str>, usize>,
}

impl Schema {
    pub fn new() -> Self {
        Schema::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, usize)>) -> Self {
        let mut s = Schema::new();
        for (r, n) in pairs {
            s.insert(r, n);
        }
        s
    }

    /// Returns the previous arity if the relation was already declared.
    pub fn insert(&mut self, relation: impl AsRef<str>, arity: usize) -> Option<usize> {
        self.relations.insert(Arc::from(relation.as_ref()), arity)
    }

    pub fn arity(&self, relation: &str) -> Option<usize> {
        self.relations.get(relation).copied()
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.relations.contains_key(relation)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Arc<str>, usize)> {
        self.relations.iter().map(|(r, n)| (r, *n))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn position_count(&self) -> usize {
        self.relations.values().sum()
    }

    pub fn union(&self, other: &Schema) -> Schema {
        let mut s = self.clone();
        for (r, n) in other.iter() {
            s.insert(r, n);
        }
        s
    }

    pub fn check_atom(&self, atom: &Atom) -> Result<(), ModelError> {
        match self.arity(&atom.relation) {
            None => Err(ModelError::UndeclaredRelation(atom.relation.to_string())),
            Some(n) if n != atom.arity() => Err(ModelError::ArityMismatch {
                relation: atom.relation.to_string(),
                expected: n,
                found: atom.arity(),
            }),
            Some(_) => Ok(()),
        }
    }
}

/// A finite set of facts.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Instance {
    facts: BTreeSet<Atom>,
}

impl Instance {
    pub fn new() -> Self {
        Instance::default()
    }

    pub fn insert(&mut self, fact: Atom) -> bool {
        debug_assert!(fact.is_ground(), "instances hold facts only: {fact}");
        self.facts.insert(fact)
    }

    pub fn remove(&mut self, fact: &Atom) -> bool {
        self.facts.remove(fact)
    }

    pub fn contains(&self, fact: &Atom) -> bool {
        self.facts.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.facts.iter()
    }

    /// Facts of one relation, in order.
    pub fn facts_of<'a>(&'a self, relation: &'a str) -> impl Iterator<Item = &'a Atom> + 'a {
        let start = Atom::new(relation, Vec::new());
        self.facts
            .range((Bound::Included(start), Bound::Unbounded))
            .take_while(move |a| &*a.relation == relation)
    }

    /// All terms occurring in the facts.
    pub fn adom(&self) -> BTreeSet<Term> {
        self.facts
            .iter()
            .flat_map(|a| a.args.iter().cloned())
            .collect()
    }

    pub fn constants(&self) -> BTreeSet<Const> {
        self.facts
            .iter()
            .flat_map(|a| a.constants().cloned())
            .collect()
    }

    pub fn nulls(&self) -> BTreeSet<NullId> {
        self.facts
            .iter()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Null(n) => Some(*n),
                _ => None,
            })
            .collect()
    }

    /// True when the instance contains no nulls.
    pub fn is_database(&self) -> bool {
        !self.facts.iter().any(Atom::has_null)
    }

    pub fn is_subset(&self, other: &Instance) -> bool {
        self.facts.is_subset(&other.facts)
    }

    pub fn union(&self, other: &Instance) -> Instance {
        Instance {
            facts: self.facts.union(&other.facts).cloned().collect(),
        }
    }

    pub fn extend(&mut self, other: impl IntoIterator<Item = Atom>) {
        for a in other {
            self.insert(a);
        }
    }

    /// Keep only the facts over relations of `schema`.
    pub fn restrict(&self, schema: &Schema) -> Instance {
        Instance {
            facts: self
                .facts
                .iter()
                .filter(|a| schema.contains(&a.relation))
                .cloned()
                .collect(),
        }
    }

    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Instance {
        Instance {
            facts: self.facts.iter().map(|a| a.map_terms(&mut f)).collect(),
        }
    }

    pub fn check_schema(&self, schema: &Schema) -> Result<(), ModelError> {
        self.facts.iter().try_for_each(|a| schema.check_atom(a))
    }
}

impl FromIterator<Atom> for Instance {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        let mut inst = Instance::new();
        inst.extend(iter);
        inst
    }
}

impl IntoIterator for Instance {
    type Item = Atom;
    type IntoIter = std::collections::btree_set::IntoIter<Atom>;

    fn into_iter(self) -> Self::IntoIter {
        self.facts.into_iter()
    }
}

impl<'a> IntoIterator for &'a Instance {
    type Item = &'a Atom;
    type IntoIter = std::collections::btree_set::Iter<'a, Atom>;

    fn into_iter(self) -> Self::IntoIter {
        self.facts.iter()
    }
}

/// One fact per line, `.facts` syntax.
impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.facts {
            writeln!(f, "{a}.")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.facts.iter()).finish()
    }
}
