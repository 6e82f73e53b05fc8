use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::OntologyStore;
use crate::personalization::AvatarProfile;
use crate::text::tokenize;

/// Number of preferred concepts injected into a query.
pub const DEFAULT_INJECTED_CONCEPTS: usize = 3;
pub const DEFAULT_INJECT_WEIGHT: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawQuery {
    pub user_id: String,
    pub domain: String,
    pub text: String,
    pub k: usize,
}

impl RawQuery {
    pub fn new(user_id: &str, domain: &str, text: &str, k: usize) -> Self {
        RawQuery {
            user_id: user_id.to_string(),
            domain: domain.to_string(),
            text: text.to_string(),
            k,
        }
    }

    pub fn validate(&self, ontology: &OntologyStore) -> Result<()> {
        if !ontology.has_domain(&self.domain) {
            return Err(Error::UnknownDomain(self.domain.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub term: String,
    pub weight: f64,
    pub injected: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnrichedQuery {
    pub terms: Vec<WeightedTerm>,
}

impl EnrichedQuery {
    pub fn contains(&self, term: &str) -> bool {
        self.terms.iter().any(|t| t.term == term)
    }

    pub fn injected(&self) -> impl Iterator<Item = &WeightedTerm> {
        self.terms.iter().filter(|t| t.injected)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Tokenizes the raw text (each distinct term at weight 1) and appends the
/// labels of up to `m` preferred concepts of the query domain at
/// `inject_weight`.
pub fn enrich(
    raw: &RawQuery,
    profile: &AvatarProfile,
    ontology: &OntologyStore,
    m: usize,
    inject_weight: f64,
) -> Result<EnrichedQuery> {
    if profile.user_id != raw.user_id {
        return Err(Error::UnknownUser(raw.user_id.clone()));
    }
    if !(inject_weight > 0.0 && inject_weight < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "injection weight {inject_weight} outside (0, 1)"
        )));
    }
    let mut q = EnrichedQuery::default();
    for term in tokenize(&raw.text) {
        if !q.contains(&term) {
            q.terms.push(WeightedTerm {
                term,
                weight: 1.0,
                injected: false,
            });
        }
    }
    for (concept_id, _) in profile.top_concepts(&raw.domain, m) {
        let label = ontology
            .concept(&concept_id)
            .map_or(concept_id, |c| c.label.to_lowercase());
        if !q.contains(&label) {
            q.terms.push(WeightedTerm {
                term: label,
                weight: inject_weight,
                injected: true,
            });
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::personalization::{ContextTriplet, Device};
    use std::collections::BTreeMap;

    pub(crate) fn profile(user: &str, domain: &str, prefs: &[(&str, f64)]) -> AvatarProfile {
        AvatarProfile {
            user_id: user.into(),
            language: "en".into(),
            context: ContextTriplet::new("??", 0, Device::Desktop).unwrap(),
            prefs: [(
                domain.to_string(),
                prefs.iter().map(|(c, w)| (c.to_string(), *w)).collect(),
            )]
            .into(),
            memberships: BTreeMap::new(),
            history: BTreeMap::new(),
        }
    }

    fn run(text: &str, prefs: &[(&str, f64)]) -> EnrichedQuery {
        let o = OntologyStore::bundled();
        let raw = RawQuery::new("u", "sports", text, 5);
        enrich(&raw, &profile("u", "sports", prefs), &o, 3, 0.3).unwrap()
    }

    fn pairs(q: &EnrichedQuery) -> Vec<(&str, f64, bool)> {
        q.terms
            .iter()
            .map(|t| (t.term.as_str(), t.weight, t.injected))
            .collect()
    }

    #[test]
    fn empty_profile_gives_raw_terms() {
        assert_eq!(
            pairs(&run("Final match", &[])),
            vec![("final", 1.0, false), ("match", 1.0, false)]
        );
    }

    #[test]
    fn injects_top_concept() {
        assert_eq!(
            pairs(&run("final match", &[("football", 1.0)])),
            vec![("final", 1.0, false), ("match", 1.0, false), ("football", 0.3, true)]
        );
    }

    #[test]
    fn no_duplicate_injection() {
        assert_eq!(
            pairs(&run("football final", &[("football", 1.0)])),
            vec![("football", 1.0, false), ("final", 1.0, false)]
        );
    }

    #[test]
    fn at_most_m_injected() {
        let q = run(
            "x",
            &[("football", 0.4), ("tennis", 0.3), ("basketball", 0.2), ("event", 0.1)],
        );
        assert_eq!(q.injected().count(), 3);
        assert!(!q.contains("event"));
    }

    #[test]
    fn wrong_user_and_domain() {
        let o = OntologyStore::bundled();
        let raw = RawQuery::new("other", "sports", "x", 5);
        assert!(matches!(
            enrich(&raw, &profile("u", "sports", &[]), &o, 3, 0.3),
            Err(Error::UnknownUser(_))
        ));
        assert!(matches!(
            RawQuery::new("u", "cooking", "x", 1).validate(&o),
            Err(Error::UnknownDomain(_))
        ));
        assert!(RawQuery::new("u", "common", "x", 1).validate(&o).is_ok());
    }
}
