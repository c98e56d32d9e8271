//! Test-data-driven selection and constraining of metamorphic relations.
//!
//! The pipeline has five stages plus constraint mining:
//!
//! 1. [`tdgen`] draws random numeric lists from a seeded fuzzer.
//! 2. [`mr`] applies each metamorphic relation's input transformation.
//! 3. [`runner`] executes source and follow-up inputs against a method under
//!    test, either from the built-in [`corpus`] or an external program.
//! 4. [`checker`] compares the two outcomes against the relation's expected
//!    output change.
//! 5. [`analyzer`] aggregates verdicts into violation frequencies and
//!    classifies each (method, relation) pair.
//!
//! [`miner`] then looks at the mixed pairs and induces input predicates that
//! separate violations from non-violations. Every stage reads and writes its
//! artifact through [`report`], so stages can be run independently.

pub mod analyzer;
pub mod checker;
pub mod corpus;
mod error;
pub mod miner;
pub mod mr;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod runner;
pub mod tdgen;

pub use error::{Error, Result};

/// Version string embedded in run manifests.
pub const TOOL_VERSION: &str = concat!("mrtrim ", env!("CARGO_PKG_VERSION"));
