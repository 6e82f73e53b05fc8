use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strategy used when nothing better is known.
pub const DEFAULT_STRATEGY: &str = "hybrid";

/// Relative weight of each ranking signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyWeights {
    pub w_concept: f64,
    pub w_text: f64,
    pub w_pref: f64,
    pub w_pher: f64,
}

impl StrategyWeights {
    pub const fn new(w_concept: f64, w_text: f64, w_pref: f64, w_pher: f64) -> Self {
        StrategyWeights {
            w_concept,
            w_text,
            w_pref,
            w_pher,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ws = [self.w_concept, self.w_text, self.w_pref, self.w_pher];
        if ws.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig("strategy weights must be non-negative".into()));
        }
        if ws.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidConfig(
                "at least one strategy weight must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        StrategyWeights::new(self.w_concept * c, self.w_text * c, self.w_pref * c, self.w_pher * c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyCatalog {
    strategies: BTreeMap<String, StrategyWeights>,
}

impl Default for StrategyCatalog {
    fn default() -> Self {
        let concept_first = StrategyWeights::new(0.5, 0.2, 0.2, 0.1);
        let strategies = [
            ("concept-first", concept_first),
            ("text-first", StrategyWeights::new(0.2, 0.5, 0.2, 0.1)),
            ("personalized", StrategyWeights::new(0.25, 0.25, 0.4, 0.1)),
            ("popular", StrategyWeights::new(0.2, 0.2, 0.1, 0.5)),
            (DEFAULT_STRATEGY, concept_first),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        StrategyCatalog { strategies }
    }
}

impl StrategyCatalog {
    pub fn new(strategies: BTreeMap<String, StrategyWeights>) -> Result<Self> {
        let catalog = StrategyCatalog { strategies };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.strategies.values() {
            w.validate()?;
        }
        if !self.strategies.contains_key(DEFAULT_STRATEGY) {
            return Err(Error::InvalidConfig(format!(
                "strategy catalog must define `{DEFAULT_STRATEGY}`"
            )));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<StrategyWeights> {
        self.strategies
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.strategies.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.strategies.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog() {
        let cat = StrategyCatalog::default();
        assert_eq!(cat.get("hybrid").unwrap(), cat.get("concept-first").unwrap());
        assert_eq!(cat.get("popular").unwrap(), StrategyWeights::new(0.2, 0.2, 0.1, 0.5));
        assert!(cat.get("nope").is_err());
    }

    #[test]
    fn weight_validation() {
        assert!(StrategyWeights::new(0.0, 0.0, 0.0, 0.0).validate().is_err());
        assert!(StrategyWeights::new(-1.0, 1.0, 0.0, 0.0).validate().is_err());
        assert!(StrategyWeights::new(0.0, 0.0, 0.0, 0.1).validate().is_ok());
    }

    #[test]
    fn catalog_requires_default() {
        let only: BTreeMap<String, StrategyWeights> =
            [("x".to_string(), StrategyWeights::new(1.0, 0.0, 0.0, 0.0))].into();
        assert!(StrategyCatalog::new(only).is_err());
    }
}
