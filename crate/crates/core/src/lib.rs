//! Multi-agent semantic video indexing and retrieval.
//!
//! Videos arrive as descriptor files (frame colour histograms plus text),
//! are segmented into shots, classified against a two-level concept
//! ontology and stored in a knowledge base whose tiers are driven by
//! pheromone-style feedback. Queries are enriched with user preferences,
//! mapped to concepts and ranked tier-first.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod classification;
pub mod config;
pub mod engine;
pub mod error;
pub mod gateway;
pub mod harness;
pub mod ingestion;
pub mod knowledge_base;
pub mod ontology;
pub mod personalization;
pub mod query;
pub mod runtime;
pub mod text;

pub use error::{Error, Result};
