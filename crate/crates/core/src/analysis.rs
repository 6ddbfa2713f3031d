//! Dependency graph of target TGDs and the weak-acyclicity test.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::model::{Schema, Setting, Term, Tgd};

/// A relation position; `index` is 1-based.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub relation: Arc<str>,
    pub index: usize,
}

impl Position {
    pub fn new(relation: impl AsRef<str>, index: usize) -> Self {
        Position {
            relation: Arc::from(relation.as_ref()),
            index,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.relation, self.index)
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<Position>,
    pub normal_edges: BTreeSet<(Position, Position)>,
    pub special_edges: BTreeSet<(Position, Position)>,
}

fn positions_of<'a>(atoms: &'a [crate::model::Atom], var: &'a crate::model::Var) -> impl Iterator<Item = Position> + 'a {
    atoms.iter().flat_map(move |a| {
        a.args
            .iter()
            .enumerate()
            .filter(move |(_, t)| matches!(t, Term::Var(v) if v == var))
            .map(move |(i, _)| Position::new(&a.relation, i + 1))
    })
}

/// Builds the graph of `tgds`. Nodes are the positions mentioned by the
/// TGDs plus every position of `schema`, if given.
pub fn dependency_graph<'a>(tgds: impl IntoIterator<Item = &'a Tgd>, schema: Option<&Schema>) -> DependencyGraph {
    let mut g = DependencyGraph::default();
    if let Some(schema) = schema {
        for (r, n) in schema.iter() {
            g.nodes.extend((1..=n).map(|i| Position::new(r, i)));
        }
    }
    for tgd in tgds {
        for a in tgd.body.iter().chain(&tgd.head) {
            g.nodes.extend((1..=a.arity()).map(|i| Position::new(&a.relation, i)));
        }
        let special_targets: Vec<Position> = tgd
            .existentials
            .iter()
            .flat_map(|z| positions_of(&tgd.head, z))
            .collect();
        for x in &tgd.frontier {
            for from in positions_of(&tgd.body, x) {
                for to in positions_of(&tgd.head, x) {
                    g.normal_edges.insert((from.clone(), to));
                }
                for to in &special_targets {
                    g.special_edges.insert((from.clone(), to.clone()));
                }
            }
        }
    }
    g
}

impl DependencyGraph {
    /// True iff no cycle goes through a special edge.
    pub fn is_weakly_acyclic(&self) -> bool {
        let mut graph = DiGraph::<(), ()>::new();
        let index: BTreeMap<&Position, NodeIndex> = self.nodes.iter().map(|p| (p, graph.add_node(()))).collect();
        for (a, b) in self.normal_edges.iter().chain(&self.special_edges) {
            graph.add_edge(index[a], index[b], ());
        }
        let mut component = vec![0usize; graph.node_count()];
        for (c, scc) in tarjan_scc(&graph).into_iter().enumerate() {
            for n in scc {
                component[n.index()] = c;
            }
        }
        self.special_edges
            .iter()
            .all(|(a, b)| component[index[a].index()] != component[index[b].index()])
    }

    /// Graphviz rendering; special edges are dashed and labelled `*`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dependencies {\n");
        for n in &self.nodes {
            let _ = writeln!(out, "  \"{n}\";");
        }
        for (a, b) in &self.normal_edges {
            let _ = writeln!(out, "  \"{a}\" -> \"{b}\";");
        }
        for (a, b) in &self.special_edges {
            let _ = writeln!(out, "  \"{a}\" -> \"{b}\" [style=dashed, label=\"*\"];");
        }
        out.push_str("}\n");
        out
    }
}

/// Weak acyclicity of the setting's target TGDs.
pub fn is_weakly_acyclic(setting: &Setting) -> bool {
    dependency_graph(setting.t_tgds(), Some(&setting.target)).is_weakly_acyclic()
}
