//! The engine's agents. Each owns its slice of state and reacts only to
//! messages; wiring happens in [`crate::engine`].

use std::sync::Arc;

use crate::classification::{classify, ClassifierModel};
use crate::error::{Error, Result};
use crate::ingestion::{crawl, extract, Fetcher, LinkStatus, LinkStore, VideoDescriptor};
use crate::knowledge_base::{KnowledgeBase, MigrationRecord};
use crate::ontology::OntologyStore;
use crate::personalization::{Personalization, StrategyCatalog};
use crate::query::{enrich, EnrichedQuery, RawQuery, RetrieveParams};
use crate::runtime::{Agent, AgentId, AgentKind, Context, Message, Payload};

pub const CRAWLER: &str = "crawler";
pub const EXTRACTOR: &str = "extractor";
pub const CLASSIFIER: &str = "classifier";
pub const KNOWLEDGE_BASE: &str = "knowledge-base";
pub const ORGANIZER: &str = "organizer";
pub const PERSONALIZATION: &str = "personalization";
pub const GATEWAY: &str = "gateway";

fn id(name: &str) -> AgentId {
    AgentId::new(name).expect("agent names are non-empty")
}

fn unexpected(agent: &str, msg: &Message) -> Error {
    Error::InvalidArgument(format!("{agent} cannot handle {}", msg.kind()))
}

/// Discovers descriptor links and keeps the links store.
pub struct CrawlerAgent {
    fetcher: Arc<dyn Fetcher>,
    pub links: LinkStore,
}

impl CrawlerAgent {
    pub fn new(fetcher: Arc<dyn Fetcher>, links: LinkStore) -> Self {
        CrawlerAgent { fetcher, links }
    }
}

impl Agent for CrawlerAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Crawler
    }

    fn handle(&mut self, msg: &Message, ctx: &mut Context<'_>) -> Result<()> {
        match &msg.payload {
            Payload::CrawlRequest {
                seeds,
                depth_limit,
                link_pattern,
            } => {
                for record in crawl(self.fetcher.as_ref(), seeds, *depth_limit, link_pattern)? {
                    let pending = record.status == LinkStatus::Pending;
                    if self.links.add(record.clone()) && pending {
                        ctx.send(&id(EXTRACTOR), Payload::LinkDiscovered(record));
                    }
                }
                Ok(())
            }
            Payload::LinkStatusChanged { uri, status } => {
                self.links.set_status(uri, *status);
                Ok(())
            }
            _ => Err(unexpected(CRAWLER, msg)),
        }
    }
}

/// Turns descriptors into metadata records.
pub struct ExtractorAgent {
    fetcher: Arc<dyn Fetcher>,
    theta: f64,
}

impl ExtractorAgent {
    pub fn new(fetcher: Arc<dyn Fetcher>, theta: f64) -> Self {
        ExtractorAgent { fetcher, theta }
    }
}

impl Agent for ExtractorAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Extractor
    }

    fn handle(&mut self, msg: &Message, ctx: &mut Context<'_>) -> Result<()> {
        match &msg.payload {
            Payload::LinkDiscovered(link) => {
                let result = self
                    .fetcher
                    .fetch(&link.uri)
                    .and_then(|body| VideoDescriptor::from_json(&body))
                    .and_then(|d| extract(&d, self.theta));
                let status = if result.is_ok() {
                    LinkStatus::Extracted
                } else {
                    LinkStatus::Failed
                };
                ctx.send(
                    &msg.from,
                    Payload::LinkStatusChanged {
                        uri: link.uri.clone(),
                        status,
                    },
                );
                let record = result?;
                ctx.send(&id(CLASSIFIER), Payload::DocumentExtracted(Box::new(record)));
                Ok(())
            }
            Payload::DescriptorSubmitted(descriptor) => {
                let record = extract(descriptor, self.theta)?;
                ctx.send(&id(CLASSIFIER), Payload::DocumentExtracted(Box::new(record)));
                Ok(())
            }
            _ => Err(unexpected(EXTRACTOR, msg)),
        }
    }
}

/// Attaches concepts to extracted records once a model is available.
pub struct ClassifierAgent {
    pub model: Option<Arc<ClassifierModel>>,
    threshold: f64,
}

impl ClassifierAgent {
    pub fn new(model: Option<Arc<ClassifierModel>>, threshold: f64) -> Self {
        ClassifierAgent { model, threshold }
    }
}

impl Agent for ClassifierAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Classifier
    }

    fn handle(&mut self, msg: &Message, ctx: &mut Context<'_>) -> Result<()> {
        match &msg.payload {
            Payload::ModelUpdated(model) => {
                self.model = Some(Arc::clone(model));
                Ok(())
            }
            Payload::DocumentExtracted(record) => {
                let mut record = record.clone();
                if let Some(model) = &self.model {
                    let kept = classify(model, &record)
                        .into_iter()
                        .filter(|c| c.confidence >= self.threshold)
                        .collect();
                    record.set_concepts(kept)?;
                }
                ctx.send(&id(KNOWLEDGE_BASE), Payload::DocumentClassified(record));
                Ok(())
            }
            _ => Err(unexpected(CLASSIFIER, msg)),
        }
    }
}

/// Single writer of the knowledge base.
pub struct KnowledgeBaseAgent {
    pub kb: KnowledgeBase,
    pub last_migrations: Vec<MigrationRecord>,
}

impl KnowledgeBaseAgent {
    pub fn new(kb: KnowledgeBase) -> Self {
        KnowledgeBaseAgent {
            kb,
            last_migrations: Vec::new(),
        }
    }
}

impl Agent for KnowledgeBaseAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::KnowledgeBase
    }

    fn handle(&mut self, msg: &Message, _ctx: &mut Context<'_>) -> Result<()> {
        match &msg.payload {
            Payload::DocumentClassified(record) => {
                self.kb.upsert(record.as_ref().clone())?;
                Ok(())
            }
            Payload::DepositPheromone { doc_id, rating, step } => {
                self.kb.deposit(doc_id, i64::from(*rating), *step)?;
                Ok(())
            }
            Payload::ReorganizeTick { evaporate } => {
                if *evaporate {
                    let rho = self.kb.params().rho;
                    self.kb.evaporate(rho)?;
                }
                self.last_migrations = self.kb.reorganize_owned();
                Ok(())
            }
            _ => Err(unexpected(KNOWLEDGE_BASE, msg)),
        }
    }
}

/// Routes deposits to the knowledge base and triggers a reorganization
/// every `every` feedback events (never when `every` is 0).
pub struct OrganizerAgent {
    every: u64,
    pub events: u64,
}

impl OrganizerAgent {
    pub fn new(every: u64, events: u64) -> Self {
        OrganizerAgent { every, events }
    }
}

impl Agent for OrganizerAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Organizer
    }

    fn handle(&mut self, msg: &Message, ctx: &mut Context<'_>) -> Result<()> {
        let kb = id(KNOWLEDGE_BASE);
        match &msg.payload {
            Payload::DepositPheromone { .. } => {
                ctx.send(&kb, msg.payload.clone());
                self.events += 1;
                if self.every > 0 && self.events.is_multiple_of(self.every) {
                    ctx.send(&kb, Payload::ReorganizeTick { evaporate: false });
                }
                Ok(())
            }
            Payload::ReorganizeTick { .. } => {
                ctx.send(&kb, msg.payload.clone());
                Ok(())
            }
            _ => Err(unexpected(ORGANIZER, msg)),
        }
    }
}

/// Avatars, facets, strategist and communities.
pub struct PersonalizationAgent {
    pub registry: Personalization,
    ontology: Arc<OntologyStore>,
    catalog: StrategyCatalog,
    params: RetrieveParams,
}

impl PersonalizationAgent {
    pub fn new(
        registry: Personalization,
        ontology: Arc<OntologyStore>,
        catalog: StrategyCatalog,
        params: RetrieveParams,
    ) -> Self {
        PersonalizationAgent {
            registry,
            ontology,
            catalog,
            params,
        }
    }
}

impl Agent for PersonalizationAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Personalization
    }

    fn handle(&mut self, msg: &Message, ctx: &mut Context<'_>) -> Result<()> {
        match &msg.payload {
            Payload::QueryRequest { query, step } => {
                query.validate(&self.ontology)?;
                self.registry.avatar(&query.user_id)?;
                let facet = self.registry.ensure_facet(&query.user_id, &query.domain)?;
                if !self.catalog.contains(&facet.strategy) {
                    return Err(Error::UnknownStrategy(facet.strategy.clone()));
                }
                let strategy = self
                    .registry
                    .record_query(&query.user_id, &query.domain, &query.text, *step)?;
                let enriched = enrich(
                    query,
                    self.registry.avatar(&query.user_id)?,
                    &self.ontology,
                    self.params.injected_concepts,
                    self.params.inject_weight,
                )?;
                ctx.send(
                    &msg.from,
                    Payload::QueryResponse {
                        query: query.clone(),
                        enriched,
                        strategy,
                    },
                );
                Ok(())
            }
            Payload::FeedbackRecorded { event, concepts } => {
                self.registry.record_feedback(event, concepts, &self.ontology)?;
                ctx.send(
                    &id(ORGANIZER),
                    Payload::DepositPheromone {
                        doc_id: event.doc_id.clone(),
                        rating: event.rating as u8,
                        step: event.step,
                    },
                );
                Ok(())
            }
            _ => Err(unexpected(PERSONALIZATION, msg)),
        }
    }
}

/// A processed query as seen by the presentation layer.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTicket {
    pub query: RawQuery,
    pub enriched: EnrichedQuery,
    pub strategy: String,
}

/// Presentation-layer endpoint collecting query responses.
#[derive(Default)]
pub struct GatewayAgent {
    pub responses: Vec<QueryTicket>,
}

impl Agent for GatewayAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Gateway
    }

    fn handle(&mut self, msg: &Message, _ctx: &mut Context<'_>) -> Result<()> {
        match &msg.payload {
            Payload::QueryResponse {
                query,
                enriched,
                strategy,
            } => {
                self.responses.push(QueryTicket {
                    query: query.clone(),
                    enriched: enriched.clone(),
                    strategy: strategy.clone(),
                });
                Ok(())
            }
            _ => Err(unexpected(GATEWAY, msg)),
        }
    }
}
