//! Toolkit for Abstract Meaning Representation (AMR) graphs.
//!
//! The crate covers the whole evaluation loop for AMR parsers:
//!
//! * [`penman`] reads, writes and structurally validates Penman notation,
//! * [`analysis`] derives triples, depth, reentrancies and inverse-normalized graphs,
//! * [`smatch`] aligns graphs by hill climbing (with an exhaustive oracle for small inputs),
//! * [`extraction`] strips chat-template delimiters from raw model generations,
//! * [`corpus`] loads LDC-style corpora, samples them by depth and writes fine-tuning records,
//! * [`evaluator`] and [`report`] score predictions and aggregate them by depth and subset,
//! * [`config`] holds the versioned run configuration used by the `amr-bench` binary.

pub mod analysis;
pub mod config;
pub mod corpus;
pub mod evaluator;
pub mod extraction;
pub mod penman;
pub mod report;
pub mod seed;
pub mod smatch;

pub use analysis::{Triple, TripleKind, TripleSet};
pub use penman::{AmrGraph, StructuralError, StructuralErrorKind, StructuralReport};

