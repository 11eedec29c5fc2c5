//! Graph-level computations: triples, depth, reentrancies and inverse-relation normalization.

use crate::penman::{AmrGraph, Edge, EdgeTarget, Layout, RelationLabel, VariableId};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

pub const INSTANCE_RELATION: &str = ":instance";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TripleKind {
    Instance,
    Relation,
    Attribute,
}

/// `(relation, source, target)`: `target` is the concept for instance triples, a variable
/// name for relation triples and the constant lexeme for attribute triples.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub kind: TripleKind,
    pub relation: String,
    pub source: VariableId,
    pub target: String,
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.relation, self.source, self.target)
    }
}

/// All triples of one graph. Holds exactly one instance triple per variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSet {
    triples: Vec<Triple>,
    variable_count: usize,
}

impl TripleSet {
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    /// Variables in order of their instance triples.
    pub fn variables(&self) -> impl Iterator<Item = &VariableId> {
        self.triples
            .iter()
            .filter(|t| t.kind == TripleKind::Instance)
            .map(|t| &t.source)
    }

    pub fn count(&self, kind: TripleKind) -> usize {
        self.triples.iter().filter(|t| t.kind == kind).count()
    }

    /// The triples as a sorted multiset, for order-insensitive comparison.
    pub fn sorted(&self) -> Vec<Triple> {
        let mut v = self.triples.clone();
        v.sort();
        v
    }
}

/// Instance triples first (in instance order), then one triple per edge in edge order.
/// Inverse labels are kept as written.
pub fn extract_triples(graph: &AmrGraph) -> TripleSet {
    let mut triples = Vec::with_capacity(graph.variable_count() + graph.edges().len());
    for (var, concept) in graph.instances() {
        triples.push(Triple {
            kind: TripleKind::Instance,
            relation: INSTANCE_RELATION.to_string(),
            source: var.clone(),
            target: concept.as_str().to_string(),
        });
    }
    for e in graph.edges() {
        let kind = match e.target {
            EdgeTarget::Variable(_) => TripleKind::Relation,
            EdgeTarget::Constant(_) => TripleKind::Attribute,
        };
        triples.push(Triple {
            kind,
            relation: e.relation.as_str().to_string(),
            source: e.source.clone(),
            target: e.target.lexeme().to_string(),
        });
    }
    TripleSet {
        triples,
        variable_count: graph.variable_count(),
    }
}

/// Maximum number of edges from the root to a leaf along the Penman nesting tree.
///
/// Bare (reentrant) references and attribute constants are leaves one edge below the node
/// they are written under. A single-node graph has depth 0.
pub fn depth(graph: &AmrGraph) -> usize {
    Layout::of(graph).depth()
}

/// Variables targeted by at least two edges, or by one edge when they are also the root.
/// Returned in instance order.
pub fn reentrancies(graph: &AmrGraph) -> Vec<VariableId> {
    let mut incoming: HashMap<&VariableId, usize> = HashMap::new();
    for e in graph.edges() {
        if let EdgeTarget::Variable(v) = &e.target {
            *incoming.entry(v).or_default() += 1;
        }
    }
    graph
        .instances()
        .keys()
        .filter(|v| {
            let n = incoming.get(v).copied().unwrap_or(0);
            n >= 2 || (n == 1 && *v == graph.root())
        })
        .cloned()
        .collect()
}

/// Which `-of` labels [`normalize_inverse`] leaves alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InverseOptions {
    /// Labels that end in `-of` but are relations in their own right.
    pub non_inverse: Vec<String>,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            non_inverse: vec![":consist-of".into(), ":part-of".into()],
        }
    }
}

impl InverseOptions {
    /// Treat every `-of` label as an inverse.
    pub fn all_inverse() -> Self {
        Self {
            non_inverse: Vec::new(),
        }
    }

    fn is_exempt(&self, label: &RelationLabel) -> bool {
        self.non_inverse
            .iter()
            .any(|l| l.eq_ignore_ascii_case(label.as_str()))
    }
}

/// Rewrites every inverse edge `(a, :x-of, b)` as `(b, :x, a)`.
///
/// Edges to constants are left alone, as are labels listed in [`InverseOptions::non_inverse`].
/// Stacked suffixes (`:x-of-of`) are removed one at a time so the result is a fixed point.
/// Instances, root and metadata are unchanged; the root may end up with incoming edges.
pub fn normalize_inverse(graph: &AmrGraph, options: &InverseOptions) -> AmrGraph {
    let edges = graph
        .edges()
        .iter()
        .map(|e| {
            let EdgeTarget::Variable(target) = &e.target else {
                return e.clone();
            };
            let mut relation = e.relation.clone();
            let mut reversed = false;
            while relation.is_inverse() && !options.is_exempt(&relation) {
                relation = relation.toggled();
                reversed = !reversed;
            }
            if reversed {
                Edge {
                    source: target.clone(),
                    relation,
                    target: EdgeTarget::Variable(e.source.clone()),
                    nested: false,
                }
            } else {
                Edge {
                    relation,
                    ..e.clone()
                }
            }
        })
        .collect();
    AmrGraph::from_parts(
        graph.root().clone(),
        graph.instances().clone(),
        edges,
        graph.metadata().clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::{parse, GraphBuilder};

    #[test]
    fn single_node() {
        let g = parse("(b / boy)").unwrap();
        let t = extract_triples(&g);
        assert_eq!(t.len(), 1);
        assert_eq!(t.triples()[0].to_string(), ":instance(b, boy)");
        assert_eq!(depth(&g), 0);
        assert!(reentrancies(&g).is_empty());
    }

    #[test]
    fn root_reentrancy() {
        let g = parse("(a / a1 :arg0 (b / b1 :arg1 a))").unwrap();
        assert_eq!(reentrancies(&g), [VariableId::new("a").unwrap()]);
    }

    #[test]
    fn constants_are_not_rewritten() {
        let g = parse("(a / thing :name-of \"x\")").unwrap();
        let n = normalize_inverse(&g, &InverseOptions::default());
        assert_eq!(n.edges(), g.edges());
    }

    #[test]
    fn stacked_suffix_reaches_fixed_point() {
        let g = parse("(a / a1 :arg0-of-of (b / b1))").unwrap();
        let once = normalize_inverse(&g, &InverseOptions::default());
        assert_eq!(once.edges()[0].relation.as_str(), ":arg0");
        assert_eq!(once.edges()[0].source.as_str(), "a");
        assert_eq!(normalize_inverse(&once, &InverseOptions::default()), once);
    }

    #[test]
    fn exempt_labels_are_configurable() {
        let g = parse("(a / area :part-of (w / world))").unwrap();
        let kept = normalize_inverse(&g, &InverseOptions::default());
        assert_eq!(kept.edges()[0].relation.as_str(), ":part-of");
        let flipped = normalize_inverse(&g, &InverseOptions::all_inverse());
        assert_eq!(flipped.edges()[0].relation.as_str(), ":part");
        assert_eq!(flipped.edges()[0].source.as_str(), "w");
    }

    #[test]
    fn depth_grows_with_fresh_leaf() {
        let base = GraphBuilder::new("a", "x").child("a", ":arg0", "b", "y");
        let before = depth(&base.clone().build().unwrap());
        let after = depth(&base.child("b", ":arg1", "c", "z").build().unwrap());
        assert_eq!((before, after), (1, 2));
    }
}
