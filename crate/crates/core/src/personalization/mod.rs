//! Avatar, facet, strategist and community logic: who the user is, what
//! they prefer per domain, which search strategy their facet uses and what
//! their communities like.

mod profile;
mod registry;
mod strategy;

pub use profile::{AvatarProfile, ContextTriplet, Device, FeedbackEvent, HistoryEntry};
pub use registry::{Community, Criterion, FacetState, Personalization, Suggestion, SuggestionKind, DEFAULT_ETA};
pub use strategy::{StrategyCatalog, StrategyWeights, DEFAULT_STRATEGY};
