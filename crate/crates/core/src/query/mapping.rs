use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::enrich::EnrichedQuery;
use super::synonyms::SynonymResource;
use crate::error::{Error, Result};
use crate::ontology::OntologyStore;

pub const DEFAULT_MAPPING_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedTerm {
    pub term: String,
    pub concept_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptMapping {
    pub pairs: Vec<MappedTerm>,
    pub unmapped: Vec<String>,
}

impl ConceptMapping {
    /// Distinct mapped concept ids, ascending.
    pub fn concept_ids(&self) -> Vec<String> {
        let ids: BTreeSet<&String> = self.pairs.iter().map(|p| &p.concept_id).collect();
        ids.into_iter().cloned().collect()
    }

    pub fn total_terms(&self) -> usize {
        self.pairs.len() + self.unmapped.len()
    }
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Maps every query term to its most similar concept of `domain`.
///
/// Similarity is 1 when the case-folded term is a synonym of the concept,
/// otherwise the Jaccard index of the term's synset and the concept's
/// synonyms. Terms whose best similarity is below `threshold` stay unmapped.
pub fn map_concepts(
    query: &EnrichedQuery,
    ontology: &OntologyStore,
    domain: &str,
    synonyms: &dyn SynonymResource,
    threshold: f64,
) -> Result<ConceptMapping> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "mapping threshold {threshold} outside (0, 1]"
        )));
    }
    let lexicon = ontology.domain_lexicon(domain)?;
    let mut mapping = ConceptMapping::default();
    for wt in &query.terms {
        let term = wt.term.to_lowercase();
        let synset = synonyms.synset(&term);
        let mut best: Option<(&str, f64)> = None;
        // Lexicon iteration is by ascending id, so strict `>` keeps the
        // smallest id among equals.
        for concept in lexicon.iter() {
            let sim = if concept.synonyms.contains(&term) {
                1.0
            } else {
                synset.as_ref().map_or(0.0, |s| jaccard(s, &concept.synonyms))
            };
            if best.is_none_or(|(_, b)| sim > b) {
                best = Some((&concept.id, sim));
            }
        }
        match best {
            Some((id, sim)) if sim >= threshold => mapping.pairs.push(MappedTerm {
                term: wt.term.clone(),
                concept_id: id.to_string(),
                similarity: sim,
            }),
            _ => mapping.unmapped.push(wt.term.clone()),
        }
    }
    Ok(mapping)
}
