//! Two-level concept store: media-level concepts shared by every domain
//! (domain `common`) and one concept lexicon per knowledge domain.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const COMMON_DOMAIN: &str = "common";

const BUNDLED_ONTOLOGY: &str = include_str!("../data/ontology.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub label: String,
    pub domain: String,
    /// Lowercased; always contains the lowercased label.
    pub synonyms: BTreeSet<String>,
    #[serde(default)]
    pub parent: Option<String>,
}

impl Concept {
    pub fn new(
        id: impl Into<String>,
        label: impl Into<String>,
        domain: impl Into<String>,
        synonyms: impl IntoIterator<Item = impl Into<String>>,
        parent: Option<String>,
    ) -> Self {
        let label = label.into();
        let mut synonyms: BTreeSet<String> = synonyms.into_iter().map(|s| s.into().to_lowercase()).collect();
        synonyms.insert(label.to_lowercase());
        Concept {
            id: id.into(),
            label,
            domain: domain.into(),
            synonyms,
            parent,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptLexicon {
    pub concepts: BTreeMap<String, Concept>,
    pub domains: BTreeSet<String>,
}

impl ConceptLexicon {
    pub fn get(&self, id: &str) -> Option<&Concept> {
        self.concepts.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OntologyFile {
    concepts: Vec<Concept>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OntologyStore {
    pub level1: ConceptLexicon,
    pub level2: BTreeMap<String, ConceptLexicon>,
}

impl OntologyStore {
    /// Builds the store from a flat concept list, checking ids, parents and
    /// acyclicity.
    pub fn from_concepts(concepts: Vec<Concept>) -> Result<Self> {
        let mut all: BTreeMap<String, Concept> = BTreeMap::new();
        for mut c in concepts {
            if c.id.is_empty() || c.domain.is_empty() {
                return Err(Error::InvalidConfig("concept with empty id or domain".into()));
            }
            c.synonyms = c.synonyms.iter().map(|s| s.to_lowercase()).collect();
            c.synonyms.insert(c.label.to_lowercase());
            if all.insert(c.id.clone(), c).is_some() {
                return Err(Error::InvalidConfig("duplicate concept id".into()));
            }
        }
        for c in all.values() {
            let Some(parent) = &c.parent else { continue };
            let p = all
                .get(parent)
                .ok_or_else(|| Error::InvalidConfig(format!("concept `{}` has dangling parent `{parent}`", c.id)))?;
            let allowed = p.domain == COMMON_DOMAIN || p.domain == c.domain;
            if !allowed {
                return Err(Error::InvalidConfig(format!(
                    "concept `{}` in `{}` cannot have parent `{parent}` from `{}`",
                    c.id, c.domain, p.domain
                )));
            }
        }
        for start in all.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = Some(start.clone());
            while let Some(id) = cur {
                if !seen.insert(id.clone()) {
                    return Err(Error::InvalidConfig(format!("is-a cycle through `{start}`")));
                }
                cur = all[&id].parent.clone();
            }
        }

        let mut level1 = ConceptLexicon::default();
        level1.domains.insert(COMMON_DOMAIN.to_string());
        let mut level2: BTreeMap<String, ConceptLexicon> = BTreeMap::new();
        for (id, c) in all {
            let lex = if c.domain == COMMON_DOMAIN {
                &mut level1
            } else {
                let lex = level2.entry(c.domain.clone()).or_default();
                lex.domains.insert(c.domain.clone());
                lex
            };
            lex.concepts.insert(id, c);
        }
        Ok(OntologyStore { level1, level2 })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: OntologyFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("ontology: {e}")))?;
        Self::from_concepts(file.concepts)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The sample ontology for the `news`, `sports` and `art` domains.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_ONTOLOGY).expect("bundled ontology is valid")
    }

    pub fn to_json(&self) -> String {
        let file = OntologyFile {
            concepts: self.concepts().cloned().collect(),
        };
        serde_json::to_string_pretty(&file).expect("ontology serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn has_domain(&self, domain: &str) -> bool {
        domain == COMMON_DOMAIN || self.level2.contains_key(domain)
    }

    /// Concept lexicon queried for `domain` (`common` selects level 1).
    pub fn domain_lexicon(&self, domain: &str) -> Result<&ConceptLexicon> {
        if domain == COMMON_DOMAIN {
            return Ok(&self.level1);
        }
        self.level2
            .get(domain)
            .ok_or_else(|| Error::UnknownDomain(domain.to_string()))
    }

    /// Knowledge domains with their own lexicon.
    pub fn domains(&self) -> impl Iterator<Item = &str> {
        self.level2.keys().map(String::as_str)
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.level1
            .get(id)
            .or_else(|| self.level2.values().find_map(|lex| lex.get(id)))
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.level1.iter().chain(self.level2.values().flat_map(|l| l.iter()))
    }
}
