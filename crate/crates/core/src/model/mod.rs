//! Terms, atoms, instances, dependencies and the satisfaction checks built on them.

mod atom;
mod dependency;
mod homomorphism;
mod supported;
mod term;

pub use atom::{Atom, Fact, Instance, Schema};
pub use dependency::{Dependency, Egd, Setting, Tgd};
pub use homomorphism::{
    apply, extend_homomorphisms, find_homomorphisms, for_each_homomorphism, is_classical_solution,
    satisfies_egd, satisfies_tgd, Homomorphism,
};
pub use supported::{is_supported_solution, supporting_choice, ExChoice};
pub use term::{Const, NullGen, NullId, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("relation {0} is not declared")]
    UndeclaredRelation(String),
    #[error("relation {relation} has arity {expected}, found {found} arguments")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("dependency {0} has an empty body")]
    EmptyBody(String),
    #[error("dependency {0} has an empty head")]
    EmptyHead(String),
    #[error("dependency {0} mentions a labeled null")]
    NullInDependency(String),
    #[error("variable {var} in the equality of {dependency} does not occur in its body")]
    UnboundEqualityVar { dependency: String, var: String },
    #[error("relation {0} is declared in both the source and the target schema")]
    SchemaOverlap(String),
    #[error("dependency id {0} is used twice")]
    DuplicateId(String),
    #[error("source instance contains a labeled null: {0}")]
    NullInSource(String),
}
