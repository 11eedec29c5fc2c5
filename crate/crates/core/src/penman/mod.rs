//! Penman notation: tokens, graphs, parsing, serialization and validation.

mod graph;
mod layout;
mod lexer;
mod parser;
mod serialize;

pub use graph::{
    AmrGraph, Concept, Edge, EdgeTarget, GraphBuilder, GraphError, RelationLabel, VariableId,
};
pub(crate) use layout::Layout;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_metadata_line, validate};
pub use serialize::{serialize, serialize_with_metadata};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Kinds of structural defects a Penman string can have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StructuralErrorKind {
    UnbalancedParens,
    DuplicateVariable,
    UndefinedVariable,
    EmptyConcept,
    MalformedRelation,
    MissingRoot,
    TrailingGarbage,
    Unparseable,
}

impl StructuralErrorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::UnbalancedParens => "UnbalancedParens",
            Self::DuplicateVariable => "DuplicateVariable",
            Self::UndefinedVariable => "UndefinedVariable",
            Self::EmptyConcept => "EmptyConcept",
            Self::MalformedRelation => "MalformedRelation",
            Self::MissingRoot => "MissingRoot",
            Self::TrailingGarbage => "TrailingGarbage",
            Self::Unparseable => "Unparseable",
        }
    }
}

impl fmt::Display for StructuralErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One defect found in a Penman string. `offset` is a character index into the input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralError {
    pub kind: StructuralErrorKind,
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for StructuralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind, self.offset, self.message)
    }
}

/// Outcome of structural validation. `valid` holds exactly when `errors` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub errors: Vec<StructuralError>,
    pub valid: bool,
}

impl StructuralReport {
    pub fn ok() -> Self {
        Self {
            errors: Vec::new(),
            valid: true,
        }
    }

    pub fn from_errors(mut errors: Vec<StructuralError>) -> Self {
        errors.sort_by_key(|e| e.offset);
        let valid = errors.is_empty();
        Self { errors, valid }
    }

    pub fn error_count(&self) -> usize {
        self.errors.len()
    }

    pub fn kinds(&self) -> Vec<StructuralErrorKind> {
        self.errors.iter().map(|e| e.kind).collect()
    }
}

impl fmt::Display for StructuralReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return f.write_str("valid");
        }
        write!(f, "{} structural error(s)", self.errors.len())?;
        for e in &self.errors {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for StructuralReport {}
