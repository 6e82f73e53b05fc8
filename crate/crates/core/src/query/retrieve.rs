use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::enrich::{enrich, EnrichedQuery, RawQuery, DEFAULT_INJECTED_CONCEPTS, DEFAULT_INJECT_WEIGHT};
use super::mapping::{map_concepts, ConceptMapping, DEFAULT_MAPPING_THRESHOLD};
use super::performance::{global_performance, PerformanceReport};
use super::synonyms::SynonymResource;
use crate::error::Result;
use crate::ingestion::{summarize, StoryboardFrame};
use crate::knowledge_base::{KbDocument, KnowledgeBase, Tier};
use crate::ontology::OntologyStore;
use crate::personalization::{AvatarProfile, StrategyWeights};
use crate::text::smoothed_idf;

/// Tiers searched, in priority order. Depreciated documents are never
/// returned.
pub const SEARCHED_TIERS: [Tier; 2] = [Tier::Active, Tier::Usual];

/// TF-IDF statistics over a snapshot of the knowledge base.
#[derive(Debug, Clone, Default)]
pub struct TextIndex {
    n_docs: usize,
    df: BTreeMap<String, usize>,
}

impl TextIndex {
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a KbDocument>) -> Self {
        let mut index = TextIndex::default();
        for doc in docs {
            index.n_docs += 1;
            for term in doc.record.text_terms.keys() {
                *index.df.entry(term.clone()).or_default() += 1;
            }
        }
        index
    }

    pub fn idf(&self, term: &str) -> f64 {
        smoothed_idf(self.n_docs, self.df.get(term).copied().unwrap_or(0))
    }

    /// Cosine between the weighted query terms and the document term bag,
    /// both TF-IDF weighted.
    pub fn cosine(&self, query: &EnrichedQuery, doc: &KbDocument) -> f64 {
        let terms = &doc.record.text_terms;
        let mut dot = 0.0;
        let mut q_norm = 0.0;
        for t in &query.terms {
            let idf = self.idf(&t.term);
            let qw = t.weight * idf;
            q_norm += qw * qw;
            if let Some(tf) = terms.get(&t.term) {
                dot += qw * f64::from(*tf) * idf;
            }
        }
        if dot == 0.0 {
            return 0.0;
        }
        let d_norm: f64 = terms
            .iter()
            .map(|(term, tf)| (f64::from(*tf) * self.idf(term)).powi(2))
            .sum();
        (dot / (q_norm.sqrt() * d_norm.sqrt())).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub concept: f64,
    pub text: f64,
    pub pref: f64,
    pub pher: f64,
}

fn pref_cosine(prefs: &BTreeMap<String, f64>, doc: &KbDocument) -> f64 {
    let dot: f64 = doc
        .record
        .concepts
        .iter()
        .map(|c| prefs.get(&c.concept_id).copied().unwrap_or(0.0) * c.confidence)
        .sum();
    if dot == 0.0 {
        return 0.0;
    }
    let p: f64 = prefs.values().map(|w| w * w).sum::<f64>().sqrt();
    let d: f64 = doc
        .record
        .concepts
        .iter()
        .map(|c| c.confidence.powi(2))
        .sum::<f64>()
        .sqrt();
    (dot / (p * d)).min(1.0)
}

/// Weighted sum of concept overlap, text similarity, preference similarity
/// and relative pheromone. Every component lies in [0, 1].
pub fn score(
    doc: &KbDocument,
    mapping: &ConceptMapping,
    query: &EnrichedQuery,
    prefs: &BTreeMap<String, f64>,
    weights: &StrategyWeights,
    tau_max: f64,
    index: &TextIndex,
) -> (f64, ScoreBreakdown) {
    let mapped = mapping.concept_ids();
    let concept = if mapped.is_empty() {
        0.0
    } else {
        mapped
            .iter()
            .map(|c| doc.record.concept_confidence(c).unwrap_or(0.0))
            .sum::<f64>()
            / mapped.len() as f64
    };
    let b = ScoreBreakdown {
        concept,
        text: index.cosine(query, doc),
        pref: pref_cosine(prefs, doc),
        pher: if tau_max > 0.0 {
            (doc.tau / tau_max).min(1.0)
        } else {
            0.0
        },
    };
    let total =
        weights.w_concept * b.concept + weights.w_text * b.text + weights.w_pref * b.pref + weights.w_pher * b.pher;
    (total, b)
}

/// Ordering key that is identical for any positive rescaling of the
/// strategy weights: the score under weights summing to one, quantized to
/// twelve decimals.
pub fn rank_key(b: &ScoreBreakdown, weights: &StrategyWeights) -> i64 {
    let sum = weights.w_concept + weights.w_text + weights.w_pref + weights.w_pher;
    let s = (weights.w_concept / sum) * b.concept
        + (weights.w_text / sum) * b.text
        + (weights.w_pref / sum) * b.pref
        + (weights.w_pher / sum) * b.pher;
    (s * 1e12).round() as i64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub doc_id: String,
    pub title: String,
    pub score: f64,
    pub tier: Tier,
    pub breakdown: ScoreBreakdown,
    pub storyboard: Vec<StoryboardFrame>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrieveParams {
    pub mapping_threshold: f64,
    pub injected_concepts: usize,
    pub inject_weight: f64,
    pub storyboard_len: usize,
}

impl Default for RetrieveParams {
    fn default() -> Self {
        RetrieveParams {
            mapping_threshold: DEFAULT_MAPPING_THRESHOLD,
            injected_concepts: DEFAULT_INJECTED_CONCEPTS,
            inject_weight: DEFAULT_INJECT_WEIGHT,
            storyboard_len: 5,
        }
    }
}

/// Results plus the performance report, as serialized to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutput {
    pub results: Vec<RankedResult>,
    pub performance: PerformanceReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalOutcome {
    pub enriched: EnrichedQuery,
    pub mapping: ConceptMapping,
    pub output: QueryOutput,
    /// True when no concept mapped and candidates came from text alone.
    pub text_fallback: bool,
}

/// Runs enrich, map, candidate selection and scoring over a knowledge-base
/// snapshot. `p_feedback` is the feedback stage's local performance.
#[allow(clippy::too_many_arguments)]
pub fn retrieve(
    raw: &RawQuery,
    profile: &AvatarProfile,
    kb: &KnowledgeBase,
    ontology: &OntologyStore,
    synonyms: &dyn SynonymResource,
    weights: &StrategyWeights,
    params: &RetrieveParams,
    p_feedback: f64,
) -> Result<RetrievalOutcome> {
    raw.validate(ontology)?;
    weights.validate()?;
    let enriched = enrich(raw, profile, ontology, params.injected_concepts, params.inject_weight)?;
    let mapping = map_concepts(&enriched, ontology, &raw.domain, synonyms, params.mapping_threshold)?;
    let index = TextIndex::build(kb.documents());

    let concepts = mapping.concept_ids();
    let text_fallback = concepts.is_empty();
    let candidates: Vec<&KbDocument> = if text_fallback {
        SEARCHED_TIERS
            .iter()
            .flat_map(|t| kb.documents_in(*t))
            .filter(|d| index.cosine(&enriched, d) > 0.0)
            .collect()
    } else {
        kb.find_by_concepts(&concepts, &SEARCHED_TIERS)?
    };

    let tau_max = candidates.iter().map(|d| d.tau).fold(0.0, f64::max);
    let tau_max = if tau_max > 0.0 { tau_max } else { 1.0 };
    let empty = BTreeMap::new();
    let prefs = profile.domain_prefs(&raw.domain).unwrap_or(&empty);

    let mut scored: Vec<(&KbDocument, f64, ScoreBreakdown, i64)> = candidates
        .into_iter()
        .map(|d| {
            let (s, b) = score(d, &mapping, &enriched, prefs, weights, tau_max, &index);
            (d, s, b, rank_key(&b, weights))
        })
        .collect();
    scored.sort_by(|a, b| {
        a.0.tier
            .cmp(&b.0.tier)
            .reverse()
            .then(b.3.cmp(&a.3))
            .then_with(|| a.0.doc_id().cmp(b.0.doc_id()))
    });
    scored.truncate(raw.k);

    let mut results = Vec::with_capacity(scored.len());
    for (doc, s, breakdown, _) in scored {
        let storyboard = if params.storyboard_len == 0 {
            Vec::new()
        } else {
            summarize(&doc.record, params.storyboard_len)?.keyframes
        };
        results.push(RankedResult {
            doc_id: doc.doc_id().to_string(),
            title: doc.record.title.clone(),
            score: s,
            tier: doc.tier,
            breakdown,
            storyboard,
        });
    }

    let total = mapping.total_terms();
    let p_map = if total == 0 {
        1.0
    } else {
        mapping.pairs.len() as f64 / total as f64
    };
    let p_retrieve = if raw.k == 0 {
        1.0
    } else {
        (results.len() as f64 / raw.k as f64).min(1.0)
    };
    let performance = global_performance(&[
        ("enrich", 1.0),
        ("map", p_map),
        ("retrieve", p_retrieve),
        ("feedback", p_feedback),
    ])?;

    Ok(RetrievalOutcome {
        enriched,
        mapping,
        output: QueryOutput { results, performance },
        text_fallback,
    })
}
