//! Facade wiring the agents into one runtime, with optional persistence in
//! a data directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{
    ClassifierAgent, CrawlerAgent, ExtractorAgent, GatewayAgent, KnowledgeBaseAgent, OrganizerAgent,
    PersonalizationAgent, QueryTicket, CLASSIFIER, CRAWLER, EXTRACTOR, GATEWAY, KNOWLEDGE_BASE, ORGANIZER,
    PERSONALIZATION,
};
use crate::classification::{classify, evaluate, train, ClassifierModel, LabelLine, LabeledExample};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::ingestion::{
    summarize, Fetcher, LinkStatus, LinkStore, MetadataRecord, StdFetcher, Storyboard, VideoDescriptor,
};
use crate::knowledge_base::{KbStats, KnowledgeBase, MigrationRecord};
use crate::ontology::OntologyStore;
use crate::personalization::{
    AvatarProfile, ContextTriplet, Criterion, Device, FeedbackEvent, Personalization, Suggestion,
};
use crate::query::{retrieve, PerformanceReport, QueryOutput, RawQuery, StaticSynonyms, SynonymResource};
use crate::runtime::{AgentId, Message, Payload, Runtime};

pub const KB_DIR: &str = "kb";
pub const USERS_DIR: &str = "users";
pub const MODEL_FILE: &str = "model.json";
pub const LINKS_FILE: &str = "links.jsonl";
pub const ONTOLOGY_FILE: &str = "ontology.json";
pub const SYNONYMS_FILE: &str = "synonyms.json";
pub const STATE_FILE: &str = "state.json";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
struct EngineState {
    step: u64,
    organizer_events: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub ingested: usize,
    pub failed: Vec<IngestFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestFailure {
    pub source: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrawlReport {
    pub discovered: usize,
    pub extracted: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub examples: usize,
    pub concepts: Vec<String>,
    pub training_accuracy: f64,
    pub reclassified: usize,
}

/// A query's results together with the strategy that ranked them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub strategy: String,
    #[serde(flatten)]
    pub output: QueryOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsView {
    #[serde(flatten)]
    pub kb: KbStats,
    pub performance: Option<PerformanceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocView {
    pub record: MetadataRecord,
    pub tau: f64,
    pub tier: crate::knowledge_base::Tier,
    pub storyboard: Storyboard,
}

pub struct Engine {
    config: Config,
    runtime: Runtime,
    ontology: Arc<OntologyStore>,
    synonyms: Arc<dyn SynonymResource>,
    data_dir: Option<PathBuf>,
    step: u64,
    last_performance: Option<PerformanceReport>,
    /// user -> normalized ratings given during this session.
    session_ratings: BTreeMap<String, Vec<f64>>,
}

fn agent_id(name: &str) -> AgentId {
    AgentId::new(name).expect("agent names are non-empty")
}

impl Engine {
    /// An engine that keeps everything in memory.
    pub fn in_memory(config: Config) -> Result<Self> {
        Self::build(
            config,
            None,
            OntologyStore::bundled(),
            Arc::new(StaticSynonyms::bundled()),
            Arc::new(StdFetcher),
        )
    }

    /// Opens (or initializes) the store in `config.data_dir`, or runs in
    /// memory when no directory is configured.
    pub fn open(config: Config) -> Result<Self> {
        Self::open_with_fetcher(config, Arc::new(StdFetcher))
    }

    pub fn open_with_fetcher(config: Config, fetcher: Arc<dyn Fetcher>) -> Result<Self> {
        let Some(dir) = config.data_dir.clone() else {
            return Self::build(
                config,
                None,
                OntologyStore::bundled(),
                Arc::new(StaticSynonyms::bundled()),
                fetcher,
            );
        };
        let ontology_path = dir.join(ONTOLOGY_FILE);
        let ontology = if ontology_path.exists() {
            OntologyStore::from_file(&ontology_path)?
        } else {
            OntologyStore::bundled()
        };
        let synonyms_path = dir.join(SYNONYMS_FILE);
        let synonyms = if synonyms_path.exists() {
            StaticSynonyms::from_file(&synonyms_path)?
        } else {
            StaticSynonyms::bundled()
        };
        Self::build(config, Some(dir), ontology, Arc::new(synonyms), fetcher)
    }

    /// Full control over the ontology, synonym resource and fetcher.
    pub fn build(
        config: Config,
        data_dir: Option<PathBuf>,
        ontology: OntologyStore,
        synonyms: Arc<dyn SynonymResource>,
        fetcher: Arc<dyn Fetcher>,
    ) -> Result<Self> {
        config.validate()?;
        let ontology = Arc::new(ontology);
        let mut kb = KnowledgeBase::new(config.pheromone)?;
        let mut registry = Personalization::new(config.eta);
        let mut model = None;
        let mut links = LinkStore::new();
        let mut state = EngineState::default();

        if let Some(dir) = &data_dir {
            if dir.join(KB_DIR).join(crate::knowledge_base::MANIFEST_FILE).exists() {
                kb = KnowledgeBase::load(&dir.join(KB_DIR))?;
            }
            registry = Personalization::load(&dir.join(USERS_DIR), config.eta)?;
            let model_path = dir.join(MODEL_FILE);
            if model_path.exists() {
                model = Some(Arc::new(ClassifierModel::load(&model_path)?));
            }
            let links_path = dir.join(LINKS_FILE);
            if links_path.exists() {
                links = LinkStore::load(&links_path)?;
            }
            let state_path = dir.join(STATE_FILE);
            if state_path.exists() {
                let text = std::fs::read_to_string(&state_path).map_err(|e| Error::io(&state_path, e))?;
                state = serde_json::from_str(&text).map_err(|e| Error::CorruptStore(format!("{STATE_FILE}: {e}")))?;
            }
        }

        let mut runtime = Runtime::new();
        runtime.spawn(CRAWLER, Box::new(CrawlerAgent::new(Arc::clone(&fetcher), links)))?;
        runtime.spawn(EXTRACTOR, Box::new(ExtractorAgent::new(fetcher, config.shot_threshold)))?;
        runtime.spawn(
            CLASSIFIER,
            Box::new(ClassifierAgent::new(model, config.classifier.confidence_threshold)),
        )?;
        runtime.spawn(KNOWLEDGE_BASE, Box::new(KnowledgeBaseAgent::new(kb)))?;
        runtime.spawn(
            ORGANIZER,
            Box::new(OrganizerAgent::new(config.reorganize_every, state.organizer_events)),
        )?;
        runtime.spawn(
            PERSONALIZATION,
            Box::new(PersonalizationAgent::new(
                registry,
                Arc::clone(&ontology),
                config.strategies.clone(),
                config.query,
            )),
        )?;
        runtime.spawn(GATEWAY, Box::<GatewayAgent>::default())?;

        Ok(Engine {
            config,
            runtime,
            ontology,
            synonyms,
            data_dir,
            step: state.step,
            last_performance: None,
            session_ratings: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    pub fn ontology(&self) -> &OntologyStore {
        &self.ontology
    }

    pub fn runtime(&self) -> &Runtime {
        &self.runtime
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.kb_agent().kb
    }

    pub fn personalization(&self) -> &Personalization {
        &self
            .runtime
            .agent::<PersonalizationAgent>(PERSONALIZATION)
            .expect("agent spawned")
            .registry
    }

    pub fn model(&self) -> Option<&ClassifierModel> {
        self.runtime
            .agent::<ClassifierAgent>(CLASSIFIER)
            .expect("agent spawned")
            .model
            .as_deref()
    }

    pub fn links(&self) -> &LinkStore {
        &self
            .runtime
            .agent::<CrawlerAgent>(CRAWLER)
            .expect("agent spawned")
            .links
    }

    pub fn last_performance(&self) -> Option<&PerformanceReport> {
        self.last_performance.as_ref()
    }

    fn kb_agent(&self) -> &KnowledgeBaseAgent {
        self.runtime
            .agent::<KnowledgeBaseAgent>(KNOWLEDGE_BASE)
            .expect("agent spawned")
    }

    fn registry_mut(&mut self) -> &mut Personalization {
        &mut self
            .runtime
            .agent_mut::<PersonalizationAgent>(PERSONALIZATION)
            .expect("agent spawned")
            .registry
    }

    fn next_step(&mut self) -> u64 {
        self.step += 1;
        self.step
    }

    /// Sends from the gateway and runs the runtime to quiescence; the first
    /// agent failure becomes the result.
    fn dispatch(&mut self, to: &str, payloads: Vec<Payload>) -> Result<()> {
        for payload in payloads {
            self.runtime
                .send(Message::new(agent_id(GATEWAY), agent_id(to), payload))?;
        }
        self.runtime.run_until_idle(&self.config.runtime)?;
        match self.runtime.take_failures().into_iter().next() {
            Some(failure) => Err(failure.error),
            None => Ok(()),
        }
    }

    pub fn create_user(
        &mut self,
        user_id: &str,
        country: &str,
        language: &str,
        device: Device,
    ) -> Result<AvatarProfile> {
        let step = self.next_step();
        let context = ContextTriplet::new(country, step, device)?;
        self.registry_mut()
            .create_avatar(user_id, country, language, context)
            .cloned()
    }

    pub fn join_community(&mut self, user_id: &str, community: &str, criterion: Criterion, degree: f64) -> Result<()> {
        self.registry_mut()
            .join_community(user_id, community, criterion, degree)
    }

    /// Extracts, classifies and stores each descriptor. Invalid descriptors
    /// are reported and skipped.
    pub fn ingest(&mut self, descriptors: Vec<VideoDescriptor>) -> Result<IngestReport> {
        let mut report = IngestReport::default();
        for d in descriptors {
            let source = d.id.clone();
            match self.dispatch(EXTRACTOR, vec![Payload::DescriptorSubmitted(Box::new(d))]) {
                Ok(()) => report.ingested += 1,
                Err(e) => report.failed.push(IngestFailure {
                    source,
                    code: e.code().to_string(),
                    message: e.to_string(),
                }),
            }
        }
        Ok(report)
    }

    /// Ingests descriptor files; directories contribute their `*.json`
    /// files in name order.
    pub fn ingest_paths(&mut self, paths: &[PathBuf]) -> Result<IngestReport> {
        let mut files = Vec::new();
        for path in paths {
            if path.is_dir() {
                let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
                    .map_err(|e| Error::io(path, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "json"))
                    .collect();
                entries.sort();
                files.extend(entries);
            } else {
                files.push(path.clone());
            }
        }
        let mut report = IngestReport::default();
        let mut descriptors = Vec::new();
        for file in files {
            match VideoDescriptor::from_file(&file) {
                Ok(d) => descriptors.push(d),
                Err(e) => report.failed.push(IngestFailure {
                    source: file.display().to_string(),
                    code: e.code().to_string(),
                    message: e.to_string(),
                }),
            }
        }
        let inner = self.ingest(descriptors)?;
        report.ingested = inner.ingested;
        report.failed.extend(inner.failed);
        Ok(report)
    }

    /// Crawls for descriptor links and ingests every newly found one.
    pub fn crawl(&mut self, seeds: &[String], depth_limit: usize, link_pattern: &str) -> Result<CrawlReport> {
        let before = self.links().len();
        self.runtime.send(Message::new(
            agent_id(GATEWAY),
            agent_id(CRAWLER),
            Payload::CrawlRequest {
                seeds: seeds.to_vec(),
                depth_limit,
                link_pattern: link_pattern.to_string(),
            },
        ))?;
        self.runtime.run_until_idle(&self.config.runtime)?;
        // Per-link fetch or parse failures are recorded on the link itself.
        let failures = self.runtime.take_failures();
        if let Some(f) = failures.iter().find(|f| f.agent.as_str() == CRAWLER) {
            return Err(Error::InvalidArgument(f.error.to_string()));
        }
        let new = &self.links().links()[before..];
        Ok(CrawlReport {
            discovered: new.len(),
            extracted: new.iter().filter(|l| l.status == LinkStatus::Extracted).count(),
            failed: new.iter().filter(|l| l.status == LinkStatus::Failed).count(),
        })
    }

    /// Trains a model on labeled stored documents, installs it and
    /// reclassifies the whole knowledge base.
    pub fn train(&mut self, labels: &[LabelLine]) -> Result<TrainReport> {
        let kb = self.knowledge_base();
        let examples = labels
            .iter()
            .map(|l| {
                let doc = kb
                    .get(&l.doc_id)
                    .ok_or_else(|| Error::UnknownDocument(l.doc_id.clone()))?;
                Ok(LabeledExample {
                    record: doc.record.clone(),
                    concept_id: l.concept_id.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = train(&examples, &self.ontology, self.config.classifier.hyper())?;
        let training_accuracy = evaluate(&model, &examples)?;
        let concepts = model.concepts.clone();
        self.install_model(model)?;
        Ok(TrainReport {
            examples: examples.len(),
            concepts,
            training_accuracy,
            reclassified: self.knowledge_base().len(),
        })
    }

    /// Replaces the classifier model and reclassifies stored documents.
    pub fn install_model(&mut self, model: ClassifierModel) -> Result<()> {
        let records: Vec<MetadataRecord> = self.knowledge_base().documents().map(|d| d.record.clone()).collect();
        let mut payloads = vec![Payload::ModelUpdated(Arc::new(model))];
        payloads.extend(records.into_iter().map(|r| Payload::DocumentExtracted(Box::new(r))));
        self.dispatch(CLASSIFIER, payloads)
    }

    /// Classifies a record with the current model without storing it.
    pub fn classify_record(&self, record: &MetadataRecord) -> Result<Vec<crate::ingestion::ConceptScore>> {
        let model = self.model().ok_or(Error::ModelMissing)?;
        Ok(classify(model, record))
    }

    fn feedback_performance(&self, user_id: &str) -> f64 {
        match self.session_ratings.get(user_id) {
            Some(r) if !r.is_empty() => r.iter().sum::<f64>() / r.len() as f64,
            _ => 1.0,
        }
    }

    pub fn query(&mut self, user_id: &str, domain: &str, text: &str, k: usize) -> Result<QueryResponse> {
        let step = self.next_step();
        let raw = RawQuery::new(user_id, domain, text, k);
        self.dispatch(PERSONALIZATION, vec![Payload::QueryRequest { query: raw, step }])?;
        let ticket: QueryTicket = self
            .runtime
            .agent_mut::<GatewayAgent>(GATEWAY)
            .expect("agent spawned")
            .responses
            .pop()
            .ok_or_else(|| Error::InvalidArgument("query produced no response".into()))?;
        let weights = self.config.strategies.get(&ticket.strategy)?;
        let profile = self.personalization().avatar(user_id)?;
        let outcome = retrieve(
            &ticket.query,
            profile,
            self.knowledge_base(),
            &self.ontology,
            self.synonyms.as_ref(),
            &weights,
            &self.config.query,
            self.feedback_performance(user_id),
        )?;
        self.last_performance = Some(outcome.output.performance.clone());
        Ok(QueryResponse {
            strategy: ticket.strategy,
            output: outcome.output,
        })
    }

    /// Records a rating: updates the user's preferences and deposits
    /// pheromone on the document. Returns the document's new level.
    pub fn feedback(&mut self, user_id: &str, doc_id: &str, rating: i64) -> Result<f64> {
        let step = self.step + 1;
        let event = FeedbackEvent {
            user_id: user_id.to_string(),
            doc_id: doc_id.to_string(),
            rating,
            step,
        };
        event.validate()?;
        self.personalization().avatar(user_id)?;
        let doc = self
            .knowledge_base()
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        let concepts = doc
            .record
            .concepts
            .iter()
            .map(|c| (c.concept_id.clone(), c.confidence))
            .collect();
        self.step = step;
        self.dispatch(PERSONALIZATION, vec![Payload::FeedbackRecorded { event, concepts }])?;
        self.session_ratings
            .entry(user_id.to_string())
            .or_default()
            .push(rating as f64 / 5.0);
        Ok(self.knowledge_base().get(doc_id).expect("document checked above").tau)
    }

    pub fn suggest(&self, user_id: &str, domain: &str, k: usize) -> Result<Vec<Suggestion>> {
        if !self.ontology.has_domain(domain) {
            return Err(Error::UnknownDomain(domain.to_string()));
        }
        self.personalization().suggest(user_id, domain, k, &self.ontology)
    }

    /// One organizer cycle: optional evaporation followed by re-tiering.
    pub fn reorganize(&mut self, evaporate: bool) -> Result<Vec<MigrationRecord>> {
        self.dispatch(ORGANIZER, vec![Payload::ReorganizeTick { evaporate }])?;
        Ok(self.kb_agent().last_migrations.clone())
    }

    pub fn stats(&self) -> StatsView {
        StatsView {
            kb: self.knowledge_base().stats(),
            performance: self.last_performance.clone(),
        }
    }

    pub fn doc(&self, doc_id: &str) -> Result<DocView> {
        let doc = self
            .knowledge_base()
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        Ok(DocView {
            record: doc.record.clone(),
            tau: doc.tau,
            tier: doc.tier,
            storyboard: summarize(&doc.record, self.config.query.storyboard_len.max(1))?,
        })
    }

    /// Writes every store to the data directory (no-op in memory).
    pub fn save(&self) -> Result<()> {
        let Some(dir) = &self.data_dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.knowledge_base().save(&dir.join(KB_DIR))?;
        self.personalization().save(&dir.join(USERS_DIR))?;
        if let Some(model) = self.model() {
            model.save(&dir.join(MODEL_FILE))?;
        }
        self.links().save(&dir.join(LINKS_FILE))?;
        let state = EngineState {
            step: self.step,
            organizer_events: self
                .runtime
                .agent::<OrganizerAgent>(ORGANIZER)
                .expect("agent spawned")
                .events,
        };
        let path = dir.join(STATE_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(&state).expect("state serializes"))
            .map_err(|e| Error::io(&path, e))
    }
}
