use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("invalid variable name {0:?}")]
    InvalidVariable(String),
    #[error("empty or malformed concept {0:?}")]
    InvalidConcept(String),
    #[error("malformed relation label {0:?}")]
    InvalidRelation(String),
    #[error("empty constant")]
    EmptyConstant,
    #[error("variable {0} has more than one instance")]
    DuplicateVariable(String),
    #[error("variable {0} is referenced but never instantiated")]
    UnknownVariable(String),
    #[error("variable {0} is not reachable from the root")]
    Unreachable(String),
}

fn is_reserved(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | ':' | '"' | '/')
}

/// Short variable name such as `w` or `a2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VariableId(String);

impl VariableId {
    pub fn new(name: impl Into<String>) -> Result<Self, GraphError> {
        let name = name.into();
        if name.is_empty() || name.chars().any(is_reserved) {
            return Err(GraphError::InvalidVariable(name));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for VariableId {
    type Error = GraphError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<VariableId> for String {
    fn from(v: VariableId) -> String {
        v.0
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Node label: an English word, a PropBank frameset such as `want-01`, or a keyword.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Concept(String);

impl Concept {
    pub fn new(label: impl Into<String>) -> Result<Self, GraphError> {
        let label = label.into();
        if label.is_empty() || label.chars().any(|c| c.is_whitespace() || c == '(' || c == ')')
        {
            return Err(GraphError::InvalidConcept(label));
        }
        Ok(Self(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The two-digit sense suffix of a frameset (`"01"` for `want-01`), if the label has one.
    pub fn sense(&self) -> Option<&str> {
        let (stem, sense) = self.0.rsplit_once('-')?;
        let well_formed = !stem.is_empty()
            && stem.split('-').all(|w| !w.is_empty())
            && sense.len() == 2
            && sense.bytes().all(|b| b.is_ascii_digit());
        well_formed.then_some(sense)
    }
}

impl TryFrom<String> for Concept {
    type Error = GraphError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<Concept> for String {
    fn from(c: Concept) -> String {
        c.0
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Relation label with its leading colon, lowercased (`:arg0`, `:op1`, `:arg0-of`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RelationLabel(String);

impl RelationLabel {
    pub fn new(label: impl AsRef<str>) -> Result<Self, GraphError> {
        let label = label.as_ref();
        if !is_well_formed_relation(label) {
            return Err(GraphError::InvalidRelation(label.to_string()));
        }
        Ok(Self(label.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_inverse(&self) -> bool {
        self.0.len() > 4 && self.0.ends_with("-of")
    }

    /// `:x-of` becomes `:x` and `:x` becomes `:x-of`.
    pub fn toggled(&self) -> RelationLabel {
        if self.is_inverse() {
            RelationLabel(self.0[..self.0.len() - 3].to_string())
        } else {
            RelationLabel(format!("{}-of", self.0))
        }
    }
}

pub(crate) fn is_well_formed_relation(label: &str) -> bool {
    let Some(rest) = label.strip_prefix(':') else {
        return false;
    };
    let mut chars = rest.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '-' || c == '_')
}

impl TryFrom<String> for RelationLabel {
    type Error = GraphError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<RelationLabel> for String {
    fn from(r: RelationLabel) -> String {
        r.0
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Edge target: a variable reference or a constant lexeme.
///
/// Constants keep their surface form, so a quoted string is stored with its quotes
/// (`"\"Sub-Saharan\""`), while numbers, `-` and `+` are stored bare.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTarget {
    Variable(VariableId),
    Constant(String),
}

impl EdgeTarget {
    pub fn variable(name: &str) -> Result<Self, GraphError> {
        VariableId::new(name).map(EdgeTarget::Variable)
    }

    pub fn constant(lexeme: impl Into<String>) -> Result<Self, GraphError> {
        let lexeme = lexeme.into();
        if lexeme.is_empty() {
            return Err(GraphError::EmptyConstant);
        }
        Ok(EdgeTarget::Constant(lexeme))
    }

    pub fn as_variable(&self) -> Option<&VariableId> {
        match self {
            EdgeTarget::Variable(v) => Some(v),
            EdgeTarget::Constant(_) => None,
        }
    }

    pub fn lexeme(&self) -> &str {
        match self {
            EdgeTarget::Variable(v) => v.as_str(),
            EdgeTarget::Constant(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: VariableId,
    pub relation: RelationLabel,
    pub target: EdgeTarget,
    /// The target node was written inline under this edge (Penman nesting).
    #[serde(default)]
    pub nested: bool,
}

/// A rooted AMR graph. Immutable once built; construct with [`super::parse`] or [`GraphBuilder`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmrGraph {
    root: VariableId,
    instances: IndexMap<VariableId, Concept>,
    edges: Vec<Edge>,
    metadata: IndexMap<String, String>,
}

impl AmrGraph {
    /// Assembles a graph whose invariants the caller has already established.
    pub(crate) fn from_parts(
        root: VariableId,
        instances: IndexMap<VariableId, Concept>,
        edges: Vec<Edge>,
        metadata: IndexMap<String, String>,
    ) -> Self {
        debug_assert!(instances.contains_key(&root));
        Self {
            root,
            instances,
            edges,
            metadata,
        }
    }

    pub fn root(&self) -> &VariableId {
        &self.root
    }

    pub fn instances(&self) -> &IndexMap<VariableId, Concept> {
        &self.instances
    }

    pub fn concept(&self, var: &VariableId) -> Option<&Concept> {
        self.instances.get(var)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn metadata(&self) -> &IndexMap<String, String> {
        &self.metadata
    }

    /// The `::id` metadata value, if present.
    pub fn id(&self) -> Option<&str> {
        self.metadata.get("id").map(String::as_str)
    }

    pub fn variable_count(&self) -> usize {
        self.instances.len()
    }

    pub fn with_metadata(mut self, metadata: IndexMap<String, String>) -> Self {
        self.metadata = metadata;
        self
    }

    pub(crate) fn instance_index(&self, var: &VariableId) -> Option<usize> {
        self.instances.get_index_of(var)
    }
}

/// Incremental constructor that checks every graph invariant in [`GraphBuilder::build`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    root: String,
    instances: Vec<(String, String)>,
    edges: Vec<(String, String, EdgeTarget)>,
    metadata: IndexMap<String, String>,
}

impl GraphBuilder {
    pub fn new(root: impl Into<String>, concept: impl Into<String>) -> Self {
        let root = root.into();
        Self {
            instances: vec![(root.clone(), concept.into())],
            root,
            edges: Vec::new(),
            metadata: IndexMap::new(),
        }
    }

    pub fn instance(mut self, var: impl Into<String>, concept: impl Into<String>) -> Self {
        self.instances.push((var.into(), concept.into()));
        self
    }

    pub fn edge(
        mut self,
        source: impl Into<String>,
        relation: impl Into<String>,
        target: EdgeTarget,
    ) -> Self {
        self.edges.push((source.into(), relation.into(), target));
        self
    }

    /// Adds a fresh instance and an edge from `source` to it.
    pub fn child(
        self,
        source: impl Into<String>,
        relation: impl Into<String>,
        var: impl Into<String>,
        concept: impl Into<String>,
    ) -> Self {
        let var = var.into();
        let target = match VariableId::new(var.clone()) {
            Ok(v) => EdgeTarget::Variable(v),
            // Surfaced by `build` when the instance is validated.
            Err(_) => EdgeTarget::Constant(var.clone()),
        };
        self.instance(var, concept).edge(source, relation, target)
    }

    pub fn metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn build(self) -> Result<AmrGraph, GraphError> {
        let root = VariableId::new(self.root)?;
        let mut instances = IndexMap::new();
        for (var, concept) in self.instances {
            let var = VariableId::new(var)?;
            let concept = Concept::new(concept)?;
            if instances.contains_key(&var) {
                return Err(GraphError::DuplicateVariable(var.0));
            }
            instances.insert(var, concept);
        }
        let mut placed: IndexSet<VariableId> = IndexSet::new();
        placed.insert(root.clone());
        let mut edges = Vec::with_capacity(self.edges.len());
        for (source, relation, target) in self.edges {
            let source = VariableId::new(source)?;
            if !instances.contains_key(&source) {
                return Err(GraphError::UnknownVariable(source.0));
            }
            let relation = RelationLabel::new(relation)?;
            let nested = match &target {
                EdgeTarget::Variable(v) => {
                    if !instances.contains_key(v) {
                        return Err(GraphError::UnknownVariable(v.0.clone()));
                    }
                    placed.insert(v.clone())
                }
                EdgeTarget::Constant(c) if c.is_empty() => return Err(GraphError::EmptyConstant),
                EdgeTarget::Constant(_) => false,
            };
            edges.push(Edge {
                source,
                relation,
                target,
                nested,
            });
        }
        let graph = AmrGraph {
            root,
            instances,
            edges,
            metadata: self.metadata,
        };
        if let Some(v) = unreachable_instance(&graph) {
            return Err(GraphError::Unreachable(v.0.clone()));
        }
        Ok(graph)
    }
}

/// First instance that cannot be reached from the root when edges are followed in either direction.
pub(crate) fn unreachable_instance(graph: &AmrGraph) -> Option<&VariableId> {
    let n = graph.instances.len();
    let mut adjacency = vec![Vec::new(); n];
    for e in &graph.edges {
        if let (Some(s), Some(t)) = (
            graph.instance_index(&e.source),
            e.target.as_variable().and_then(|v| graph.instance_index(v)),
        ) {
            adjacency[s].push(t);
            adjacency[t].push(s);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![graph.instance_index(&graph.root)?];
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut seen[i], true) {
            continue;
        }
        stack.extend(adjacency[i].iter().copied().filter(|&j| !seen[j]));
    }
    seen.iter()
        .position(|s| !s)
        .and_then(|i| graph.instances.get_index(i).map(|(v, _)| v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_rejects_reserved_characters() {
        for bad in ["", "a b", "a(", "x:y", "\"q\"", "a/b"] {
            assert!(VariableId::new(bad).is_err(), "{bad:?}");
        }
        assert_eq!(VariableId::new("a2").unwrap().as_str(), "a2");
    }

    #[test]
    fn relation_is_lowercased_and_toggles() {
        let r = RelationLabel::new(":ARG0-of").unwrap();
        assert_eq!(r.as_str(), ":arg0-of");
        assert!(r.is_inverse());
        assert_eq!(r.toggled().as_str(), ":arg0");
        assert_eq!(r.toggled().toggled(), r);
        assert!(RelationLabel::new("arg0").is_err());
        assert!(RelationLabel::new(":").is_err());
        assert!(RelationLabel::new(":0x").is_err());
        assert!(!RelationLabel::new(":of").unwrap().is_inverse());
    }

    #[test]
    fn frameset_sense() {
        assert_eq!(Concept::new("want-01").unwrap().sense(), Some("01"));
        assert_eq!(Concept::new("have-org-role-91").unwrap().sense(), Some("91"));
        assert_eq!(Concept::new("boy").unwrap().sense(), None);
        assert_eq!(Concept::new("date-entity").unwrap().sense(), None);
    }

    #[test]
    fn builder_checks_invariants() {
        let g = GraphBuilder::new("w", "want-01")
            .child("w", ":arg0", "b", "boy")
            .child("w", ":arg1", "g", "go-01")
            .edge("g", ":arg0", EdgeTarget::variable("b").unwrap())
            .build()
            .unwrap();
        assert_eq!(g.variable_count(), 3);
        assert_eq!(g.edges().len(), 3);
        assert!(g.edges()[0].nested && !g.edges()[2].nested);

        let err = GraphBuilder::new("a", "x")
            .instance("b", "y")
            .build()
            .unwrap_err();
        assert_eq!(err, GraphError::Unreachable("b".into()));

        let err = GraphBuilder::new("a", "x")
            .edge("a", ":arg0", EdgeTarget::variable("q").unwrap())
            .build()
            .unwrap_err();
        assert_eq!(err, GraphError::UnknownVariable("q".into()));

        let err = GraphBuilder::new("a", "x").instance("a", "y").build().unwrap_err();
        assert_eq!(err, GraphError::DuplicateVariable("a".into()));
    }
}
