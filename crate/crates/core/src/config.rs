//! Engine configuration, read from TOML (or JSON when the file ends in
//! `.json`). Every field has a default, so an empty file is valid.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classification::{Hyper, DEFAULT_CONFIDENCE_THRESHOLD};
use crate::error::{Error, Result};
use crate::ingestion::DEFAULT_SHOT_THRESHOLD;
use crate::knowledge_base::PheromoneParams;
use crate::personalization::{StrategyCatalog, DEFAULT_ETA};
use crate::query::RetrieveParams;
use crate::runtime::RuntimeConfig;

/// Environment variable naming a config file.
pub const CONFIG_ENV: &str = "VIDMAS_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub confidence_threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        let h = Hyper::default();
        ClassifierConfig {
            lambda: h.lambda,
            epochs: h.epochs,
            seed: h.seed,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
        }
    }
}

impl ClassifierConfig {
    pub fn hyper(&self) -> Hyper {
        Hyper {
            lambda: self.lambda,
            epochs: self.epochs,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    /// Allowed browser origin; `*` allows any.
    pub cors_origin: String,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            cors_origin: "*".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: Option<PathBuf>,
    pub runtime: RuntimeConfig,
    pub pheromone: PheromoneParams,
    pub classifier: ClassifierConfig,
    pub shot_threshold: f64,
    pub query: RetrieveParams,
    pub eta: f64,
    /// Feedback events between automatic reorganizations; 0 disables.
    pub reorganize_every: u64,
    pub strategies: StrategyCatalog,
    pub server: ServerConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            data_dir: None,
            runtime: RuntimeConfig::default(),
            pheromone: PheromoneParams::default(),
            classifier: ClassifierConfig::default(),
            shot_threshold: DEFAULT_SHOT_THRESHOLD,
            query: RetrieveParams::default(),
            eta: DEFAULT_ETA,
            reorganize_every: 10,
            strategies: StrategyCatalog::default(),
            server: ServerConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Config = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    /// Reads `explicit` if given, else the file named by `VIDMAS_CONFIG`,
    /// else the defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        if let Some(path) = explicit {
            return Self::from_file(path);
        }
        match std::env::var_os(CONFIG_ENV) {
            Some(path) if !path.is_empty() => Self::from_file(Path::new(&path)),
            _ => Ok(Config::default()),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.runtime.validate()?;
        self.pheromone.validate()?;
        self.strategies.validate()?;
        let c = &self.classifier;
        if !(c.lambda > 0.0) || c.epochs == 0 {
            return Err(Error::InvalidConfig(
                "classifier needs lambda > 0 and epochs >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&c.confidence_threshold) {
            return Err(Error::InvalidConfig("confidence_threshold must lie in [0, 1]".into()));
        }
        if !(self.shot_threshold > 0.0 && self.shot_threshold <= 2.0) {
            return Err(Error::InvalidConfig("shot_threshold must lie in (0, 2]".into()));
        }
        let q = &self.query;
        if !(q.mapping_threshold > 0.0 && q.mapping_threshold <= 1.0) {
            return Err(Error::InvalidConfig("mapping_threshold must lie in (0, 1]".into()));
        }
        if !(q.inject_weight > 0.0 && q.inject_weight < 1.0) {
            return Err(Error::InvalidConfig("inject_weight must lie in (0, 1)".into()));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
        assert_eq!(Config::from_json("{}").unwrap(), Config::default());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = Config::default();
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_override() {
        let c = Config::from_toml(
            "reorganize_every = 3\n[pheromone]\ntau0 = 1.0\nrho = 0.2\ntheta_active = 3.0\ntheta_depr = 0.1\nq = 2.0\n\
             [strategies.hybrid]\nw_concept = 1.0\nw_text = 0.0\nw_pref = 0.0\nw_pher = 0.0\n",
        )
        .unwrap();
        assert_eq!(c.reorganize_every, 3);
        assert_eq!(c.pheromone.rho, 0.2);
        assert_eq!(c.strategies.names().collect::<Vec<_>>(), vec!["hybrid"]);
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            "shot_threshold = 3.0",
            "eta = 0.0",
            "unknown_key = 1",
            "[strategies.fast]\nw_concept = 1.0\nw_text = 0.0\nw_pref = 0.0\nw_pher = 0.0\n",
            "[runtime]\nseed = 1\nmax_steps = 0\ndeterministic = true\n",
        ] {
            assert_eq!(Config::from_toml(text).unwrap_err().code(), "InvalidConfig", "{text}");
        }
    }
}
