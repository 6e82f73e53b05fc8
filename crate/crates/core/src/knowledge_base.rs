//! Data access layer: documents spread over the active, usual and
//! depreciated bases, each carrying a pheromone level that user feedback
//! raises and time evaporates. The organizer migrates documents between
//! bases from those levels.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::MetadataRecord;

pub const SCHEMA_VERSION: &str = "1";
pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Ordered `Depreciated < Usual < Active`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Depreciated,
    Usual,
    Active,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Active, Tier::Usual, Tier::Depreciated];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Active => "active",
            Tier::Usual => "usual",
            Tier::Depreciated => "depreciated",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "active" => Ok(Tier::Active),
            "usual" => Ok(Tier::Usual),
            "depreciated" => Ok(Tier::Depreciated),
            other => Err(Error::InvalidArgument(format!("unknown tier `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PheromoneParams {
    pub tau0: f64,
    pub rho: f64,
    pub theta_active: f64,
    pub theta_depr: f64,
    /// Deposit for a top rating.
    pub q: f64,
}

impl Default for PheromoneParams {
    fn default() -> Self {
        PheromoneParams {
            tau0: 1.0,
            rho: 0.1,
            theta_active: 2.0,
            theta_depr: 0.2,
            q: 1.0,
        }
    }
}

impl PheromoneParams {
    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 < self.theta_depr && self.theta_depr < self.tau0 && self.tau0 < self.theta_active;
        if !ordered {
            return Err(Error::InvalidConfig(
                "pheromone thresholds must satisfy 0 < theta_depr < tau0 < theta_active".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidConfig("rho must lie in (0, 1)".into()));
        }
        if !(self.q >= 0.0) {
            return Err(Error::InvalidConfig("deposit scale must be non-negative".into()));
        }
        Ok(())
    }

    /// Tier implied by a pheromone level.
    pub fn tier_for(&self, tau: f64) -> Tier {
        if tau >= self.theta_active {
            Tier::Active
        } else if tau < self.theta_depr {
            Tier::Depreciated
        } else {
            Tier::Usual
        }
    }

    /// Evaporate+reorganize cycles a never-rated document needs to fall from
    /// `tau0` below `theta_depr`.
    pub fn cycles_to_depreciation(&self) -> u32 {
        ((self.theta_depr / self.tau0).ln() / (1.0 - self.rho).ln()).ceil() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KbDocument {
    pub record: MetadataRecord,
    pub tau: f64,
    pub tier: Tier,
    pub request_count: u64,
    pub last_feedback_step: u64,
}

impl KbDocument {
    pub fn doc_id(&self) -> &str {
        &self.record.doc_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Migration<'a> {
    pub doc_id: &'a str,
    pub from: Tier,
    pub to: Tier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrationRecord {
    pub doc_id: String,
    pub from: Tier,
    pub to: Tier,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TierTau {
    pub active: f64,
    pub usual: f64,
    pub depreciated: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KbStats {
    pub active: usize,
    pub usual: usize,
    pub depreciated: usize,
    pub total: usize,
    /// Mean pheromone per tier (0 for an empty tier).
    pub mean_tau: TierTau,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbCounters {
    pub feedback_events: u64,
    pub last_step: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema_version: String,
    params: PheromoneParams,
    document_count: usize,
    counters: KbCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    params: PheromoneParams,
    docs: BTreeMap<String, KbDocument>,
    counters: KbCounters,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        Self::new(PheromoneParams::default()).expect("default params are valid")
    }
}

impl KnowledgeBase {
    pub fn new(params: PheromoneParams) -> Result<Self> {
        params.validate()?;
        Ok(KnowledgeBase {
            params,
            docs: BTreeMap::new(),
            counters: KbCounters::default(),
        })
    }

    pub fn params(&self) -> &PheromoneParams {
        &self.params
    }

    pub fn counters(&self) -> KbCounters {
        self.counters
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&KbDocument> {
        self.docs.get(doc_id)
    }

    /// Documents in ascending id order.
    pub fn documents(&self) -> impl Iterator<Item = &KbDocument> {
        self.docs.values()
    }

    #[cfg(test)]
    pub(crate) fn doc_mut(&mut self, doc_id: &str) -> &mut KbDocument {
        self.docs.get_mut(doc_id).expect("test document exists")
    }

    /// New documents start in the usual base at `tau0`.
    pub fn insert(&mut self, record: MetadataRecord) -> Result<String> {
        if record.doc_id.is_empty() {
            return Err(Error::InvalidArgument("empty doc_id".into()));
        }
        if self.docs.contains_key(&record.doc_id) {
            return Err(Error::DuplicateDocument(record.doc_id));
        }
        let id = record.doc_id.clone();
        self.docs.insert(
            id.clone(),
            KbDocument {
                record,
                tau: self.params.tau0,
                tier: Tier::Usual,
                request_count: 0,
                last_feedback_step: 0,
            },
        );
        Ok(id)
    }

    /// Inserts a new record, or refreshes the metadata of an existing one
    /// while keeping its pheromone, tier and counters.
    pub fn upsert(&mut self, record: MetadataRecord) -> Result<bool> {
        match self.docs.get_mut(&record.doc_id) {
            Some(doc) => {
                doc.record = record;
                Ok(false)
            }
            None => self.insert(record).map(|_| true),
        }
    }

    /// `tau += q * rating / 5`.
    pub fn deposit(&mut self, doc_id: &str, rating: i64, step: u64) -> Result<f64> {
        if !(0..=5).contains(&rating) {
            return Err(Error::InvalidRating(rating));
        }
        let q = self.params.q;
        let doc = self
            .docs
            .get_mut(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        doc.tau += q * rating as f64 / 5.0;
        doc.request_count += 1;
        doc.last_feedback_step = step;
        self.counters.feedback_events += 1;
        self.counters.last_step = self.counters.last_step.max(step);
        Ok(doc.tau)
    }

    /// Geometric decay of every pheromone level.
    pub fn evaporate(&mut self, rho: f64) -> Result<usize> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidArgument(format!("rho {rho} outside (0, 1)")));
        }
        for doc in self.docs.values_mut() {
            doc.tau *= 1.0 - rho;
        }
        Ok(self.docs.len())
    }

    /// Re-tiers every document from its pheromone level and reports the moves.
    pub fn reorganize(&mut self, params: &PheromoneParams) -> Vec<Migration<'_>> {
        let mut moved = Vec::new();
        for doc in self.docs.values_mut() {
            let tier = params.tier_for(doc.tau);
            if tier != doc.tier {
                moved.push((doc.record.doc_id.as_str(), doc.tier, tier));
                doc.tier = tier;
            }
        }
        moved
            .into_iter()
            .map(|(doc_id, from, to)| Migration { doc_id, from, to })
            .collect()
    }

    /// Owned variant of [`reorganize`](Self::reorganize) using the store's params.
    pub fn reorganize_owned(&mut self) -> Vec<MigrationRecord> {
        let params = self.params;
        self.reorganize(&params)
            .into_iter()
            .map(|m| MigrationRecord {
                doc_id: m.doc_id.to_string(),
                from: m.from,
                to: m.to,
            })
            .collect()
    }

    /// Documents carrying any of `concepts`, grouped by tier in `tier_order`
    /// and by ascending id within a tier.
    pub fn find_by_concepts(&self, concepts: &[String], tier_order: &[Tier]) -> Result<Vec<&KbDocument>> {
        validate_tier_order(tier_order)?;
        let wanted: BTreeSet<&str> = concepts.iter().map(String::as_str).collect();
        let mut out = Vec::new();
        for tier in tier_order {
            out.extend(
                self.docs
                    .values()
                    .filter(|d| d.tier == *tier && d.record.has_any_concept(wanted.iter().copied())),
            );
        }
        Ok(out)
    }

    pub fn documents_in(&self, tier: Tier) -> impl Iterator<Item = &KbDocument> {
        self.docs.values().filter(move |d| d.tier == tier)
    }

    pub fn stats(&self) -> KbStats {
        let mut stats = KbStats {
            total: self.docs.len(),
            ..KbStats::default()
        };
        let mut sums = [0.0f64; 3];
        for doc in self.docs.values() {
            match doc.tier {
                Tier::Active => {
                    stats.active += 1;
                    sums[0] += doc.tau;
                }
                Tier::Usual => {
                    stats.usual += 1;
                    sums[1] += doc.tau;
                }
                Tier::Depreciated => {
                    stats.depreciated += 1;
                    sums[2] += doc.tau;
                }
            }
        }
        let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
        stats.mean_tau = TierTau {
            active: mean(sums[0], stats.active),
            usual: mean(sums[1], stats.usual),
            depreciated: mean(sums[2], stats.depreciated),
        };
        stats
    }

    /// Writes `documents.jsonl` and `manifest.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let docs_path = dir.join(DOCUMENTS_FILE);
        let mut file = std::fs::File::create(&docs_path).map_err(|e| Error::io(&docs_path, e))?;
        for doc in self.docs.values() {
            let line = serde_json::to_string(doc).expect("document serializes");
            writeln!(file, "{line}").map_err(|e| Error::io(&docs_path, e))?;
        }
        file.flush().map_err(|e| Error::io(&docs_path, e))?;
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION.to_string(),
            params: self.params,
            document_count: self.docs.len(),
            counters: self.counters,
        };
        let manifest_path = dir.join(MANIFEST_FILE);
        std::fs::write(
            &manifest_path,
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )
        .map_err(|e| Error::io(&manifest_path, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::CorruptStore(format!("manifest: {e}")))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(Error::CorruptStore(format!(
                "unsupported schema version `{}`",
                manifest.schema_version
            )));
        }
        manifest
            .params
            .validate()
            .map_err(|e| Error::CorruptStore(e.to_string()))?;

        let docs_path = dir.join(DOCUMENTS_FILE);
        let file = std::fs::File::open(&docs_path).map_err(|e| Error::io(&docs_path, e))?;
        let mut docs = BTreeMap::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&docs_path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: KbDocument = serde_json::from_str(&line)
                .map_err(|e| Error::CorruptStore(format!("{DOCUMENTS_FILE}:{}: {e}", n + 1)))?;
            if !(doc.tau >= 0.0) {
                return Err(Error::CorruptStore(format!("negative tau for `{}`", doc.doc_id())));
            }
            if docs.insert(doc.record.doc_id.clone(), doc).is_some() {
                return Err(Error::CorruptStore("duplicate document id".into()));
            }
        }
        if docs.len() != manifest.document_count {
            return Err(Error::CorruptStore(format!(
                "manifest lists {} documents, found {}",
                manifest.document_count,
                docs.len()
            )));
        }
        Ok(KnowledgeBase {
            params: manifest.params,
            docs,
            counters: manifest.counters,
        })
    }
}

pub(crate) fn validate_tier_order(tier_order: &[Tier]) -> Result<()> {
    if tier_order.is_empty() {
        return Err(Error::InvalidArgument("tier order must not be empty".into()));
    }
    let uniq: BTreeSet<_> = tier_order.iter().collect();
    if uniq.len() != tier_order.len() {
        return Err(Error::InvalidArgument("tier order has duplicates".into()));
    }
    Ok(())
}
