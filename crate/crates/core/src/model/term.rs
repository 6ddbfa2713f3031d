use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

/// A constant. Naturals and quoted strings with the same text denote the
/// same constant: `1` and `"1"` are equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Const(Arc<str>);

impl Const {
    pub fn new(name: impl AsRef<str>) -> Self {
        Const(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// True when the constant prints as a bare natural number.
    pub fn is_numeral(&self) -> bool {
        !self.0.is_empty() && self.0.bytes().all(|b| b.is_ascii_digit())
    }
}

impl From<&str> for Const {
    fn from(s: &str) -> Self {
        Const::new(s)
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_numeral() {
            f.write_str(&self.0)
        } else {
            f.write_str("\"")?;
            for c in self.0.chars() {
                match c {
                    '"' => f.write_str("\\\"")?,
                    '\\' => f.write_str("\\\\")?,
                    '\n' => f.write_str("\\n")?,
                    c => write!(f, "{c}")?,
                }
            }
            f.write_str("\"")
        }
    }
}

impl fmt::Debug for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: impl AsRef<str>) -> Self {
        Var(Arc::from(name.as_ref()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Identifier of a labeled null. Printed as `_N`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NullId(pub u32);

impl fmt::Display for NullId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_{}", self.0)
    }
}

impl fmt::Debug for NullId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(Const),
    Null(NullId),
    Var(Var),
}

impl Term {
    pub fn constant(name: impl AsRef<str>) -> Self {
        Term::Const(Const::new(name))
    }

    pub fn var(name: impl AsRef<str>) -> Self {
        Term::Var(Var::new(name))
    }

    pub fn null(id: u32) -> Self {
        Term::Null(NullId(id))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Term::Const(_))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Term::Null(_))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_const(&self) -> Option<&Const> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl From<Const> for Term {
    fn from(c: Const) -> Self {
        Term::Const(c)
    }
}

impl From<Var> for Term {
    fn from(v: Var) -> Self {
        Term::Var(v)
    }
}

impl From<NullId> for Term {
    fn from(n: NullId) -> Self {
        Term::Null(n)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Null(n) => write!(f, "{n}"),
            Term::Var(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Monotone source of fresh null identifiers. Ids start at 1.
#[derive(Debug, Default)]
pub struct NullGen {
    next: AtomicU32,
}

impl NullGen {
    pub fn new() -> Self {
        NullGen::default()
    }

    /// Continue numbering after `last`, so ids already in use are never reissued.
    pub fn starting_after(last: u32) -> Self {
        NullGen {
            next: AtomicU32::new(last),
        }
    }

    pub fn fresh(&self) -> NullId {
        NullId(self.next.fetch_add(1, Ordering::Relaxed) + 1)
    }

    pub fn issued(&self) -> u32 {
        self.next.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_are_disjoint() {
        let c = Term::constant("x");
        let v = Term::var("x");
        assert_ne!(c, v);
        assert_ne!(Term::null(1), Term::constant("1"));
    }

    #[test]
    fn numerals_print_bare() {
        assert_eq!(Const::new("12").to_string(), "12");
        assert_eq!(Const::new("yes").to_string(), "\"yes\"");
        assert_eq!(Const::new("a\"b").to_string(), "\"a\\\"b\"");
        assert_eq!(Term::null(3).to_string(), "_3");
    }

    #[test]
    fn null_gen_is_monotone() {
        let g = NullGen::new();
        let a = g.fresh();
        let b = g.fresh();
        assert!(a < b);
        assert_eq!(a, NullId(1));
        let g2 = NullGen::starting_after(7);
        assert_eq!(g2.fresh(), NullId(8));
    }
}
