use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_SYNONYMS: &str = include_str!("../../data/synonyms.json");

/// Source of synonym sets for free-text terms.
pub trait SynonymResource: Send + Sync {
    /// Lowercased synonym set of `term` (including the term itself), if known.
    fn synset(&self, term: &str) -> Option<BTreeSet<String>>;
}

/// Synonym table held in memory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StaticSynonyms {
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl StaticSynonyms {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_SYNONYMS).expect("bundled synonym table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: StaticSynonyms =
            serde_json::from_str(text).map_err(|e| Error::CorruptStore(format!("synonym table: {e}")))?;
        let mut table = StaticSynonyms::new();
        for (term, set) in raw.entries {
            table.insert(&term, set.iter().map(String::as_str));
        }
        Ok(table)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("synonym table serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn insert<'a>(&mut self, term: &str, synonyms: impl IntoIterator<Item = &'a str>) {
        let term = term.to_lowercase();
        let mut set: BTreeSet<String> = synonyms.into_iter().map(str::to_lowercase).collect();
        set.insert(term.clone());
        self.entries.insert(term, set);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl SynonymResource for StaticSynonyms {
    fn synset(&self, term: &str) -> Option<BTreeSet<String>> {
        self.entries.get(&term.to_lowercase()).cloned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table() {
        let s = StaticSynonyms::bundled();
        assert!(s.len() >= 90);
        let soccer = s.synset("Soccer").unwrap();
        assert_eq!(soccer, ["football", "soccer"].iter().map(|s| s.to_string()).collect());
        assert!(s.synset("zzqx").is_none());
    }

    #[test]
    fn insert_adds_term_and_lowercases() {
        let mut s = StaticSynonyms::new();
        s.insert("Pitch", ["Field"]);
        assert_eq!(s.synset("pitch").unwrap().len(), 2);
        let back = StaticSynonyms::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn malformed_table() {
        assert!(matches!(StaticSynonyms::from_json("[1]"), Err(Error::CorruptStore(_))));
    }
}
