//! Query processing: enrichment, concept mapping, scoring and tier-first
//! retrieval, plus the per-stage performance product.

mod enrich;
mod mapping;
mod performance;
mod retrieve;
mod synonyms;

pub use enrich::{enrich, EnrichedQuery, RawQuery, WeightedTerm, DEFAULT_INJECTED_CONCEPTS, DEFAULT_INJECT_WEIGHT};
pub use mapping::{map_concepts, ConceptMapping, MappedTerm, DEFAULT_MAPPING_THRESHOLD};
pub use performance::{global_performance, PerformanceReport, StagePerformance};
pub use retrieve::{
    rank_key, retrieve, score, QueryOutput, RankedResult, RetrievalOutcome, RetrieveParams, ScoreBreakdown, TextIndex,
    SEARCHED_TIERS,
};
pub use synonyms::{StaticSynonyms, SynonymResource};
