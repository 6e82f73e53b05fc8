//! Actor-style runtime hosting every agent of the engine.
//!
//! Agents own their state and only talk through [`Message`]s. The runtime
//! keeps one mailbox per agent and assigns each sent message a global,
//! strictly increasing sequence number. In deterministic mode the next
//! delivery is always the oldest pending message (global FIFO); otherwise a
//! seeded scheduler picks any non-empty mailbox, which is still fair but
//! interleaves agents differently.

use std::any::Any;
use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classification::ClassifierModel;
use crate::error::{Error, Result};
use crate::ingestion::{LinkRecord, LinkStatus, MetadataRecord, VideoDescriptor};
use crate::personalization::FeedbackEvent;
use crate::query::{EnrichedQuery, RawQuery};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidArgument("agent name must not be empty".into()));
        }
        Ok(AgentId(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The roles an agent can play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Avatar,
    Facet,
    Strategist,
    Community,
    /// Hosts the avatar, facet, strategist and community roles together.
    Personalization,
    Crawler,
    Extractor,
    Classifier,
    Organizer,
    KnowledgeBase,
    Gateway,
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    CrawlRequest,
    LinkDiscovered,
    LinkStatusChanged,
    DescriptorSubmitted,
    DocumentExtracted,
    DocumentClassified,
    ModelUpdated,
    FeedbackRecorded,
    DepositPheromone,
    ReorganizeTick,
    QueryRequest,
    QueryResponse,
    Countdown,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::CrawlRequest => "CrawlRequest",
            MessageKind::LinkDiscovered => "LinkDiscovered",
            MessageKind::LinkStatusChanged => "LinkStatusChanged",
            MessageKind::DescriptorSubmitted => "DescriptorSubmitted",
            MessageKind::DocumentExtracted => "DocumentExtracted",
            MessageKind::DocumentClassified => "DocumentClassified",
            MessageKind::ModelUpdated => "ModelUpdated",
            MessageKind::FeedbackRecorded => "FeedbackRecorded",
            MessageKind::DepositPheromone => "DepositPheromone",
            MessageKind::ReorganizeTick => "ReorganizeTick",
            MessageKind::QueryRequest => "QueryRequest",
            MessageKind::QueryResponse => "QueryResponse",
            MessageKind::Countdown => "Countdown",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Message body. The variant fixes the [`MessageKind`], so a kind can never
/// carry the wrong payload shape.
#[derive(Debug, Clone)]
pub enum Payload {
    CrawlRequest {
        seeds: Vec<String>,
        depth_limit: usize,
        link_pattern: String,
    },
    LinkDiscovered(LinkRecord),
    LinkStatusChanged {
        uri: String,
        status: LinkStatus,
    },
    DescriptorSubmitted(Box<VideoDescriptor>),
    DocumentExtracted(Box<MetadataRecord>),
    DocumentClassified(Box<MetadataRecord>),
    ModelUpdated(Arc<ClassifierModel>),
    FeedbackRecorded {
        event: FeedbackEvent,
        /// `(concept id, confidence)` of the rated document.
        concepts: Vec<(String, f64)>,
    },
    DepositPheromone {
        doc_id: String,
        rating: u8,
        step: u64,
    },
    ReorganizeTick {
        evaporate: bool,
    },
    QueryRequest {
        query: RawQuery,
        step: u64,
    },
    QueryResponse {
        query: RawQuery,
        enriched: EnrichedQuery,
        strategy: String,
    },
    Countdown(u32),
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::CrawlRequest { .. } => MessageKind::CrawlRequest,
            Payload::LinkDiscovered(_) => MessageKind::LinkDiscovered,
            Payload::LinkStatusChanged { .. } => MessageKind::LinkStatusChanged,
            Payload::DescriptorSubmitted(_) => MessageKind::DescriptorSubmitted,
            Payload::DocumentExtracted(_) => MessageKind::DocumentExtracted,
            Payload::DocumentClassified(_) => MessageKind::DocumentClassified,
            Payload::ModelUpdated(_) => MessageKind::ModelUpdated,
            Payload::FeedbackRecorded { .. } => MessageKind::FeedbackRecorded,
            Payload::DepositPheromone { .. } => MessageKind::DepositPheromone,
            Payload::ReorganizeTick { .. } => MessageKind::ReorganizeTick,
            Payload::QueryRequest { .. } => MessageKind::QueryRequest,
            Payload::QueryResponse { .. } => MessageKind::QueryResponse,
            Payload::Countdown(_) => MessageKind::Countdown,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Message {
    pub from: AgentId,
    pub to: AgentId,
    pub payload: Payload,
    /// Assigned by the runtime on send; 0 until then.
    pub seq: u64,
}

impl Message {
    pub fn new(from: AgentId, to: AgentId, payload: Payload) -> Self {
        Message {
            from,
            to,
            payload,
            seq: 0,
        }
    }

    pub fn kind(&self) -> MessageKind {
        self.payload.kind()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuntimeConfig {
    pub seed: u64,
    pub max_steps: u64,
    pub deterministic: bool,
}

impl Default for RuntimeConfig {
    fn default() -> Self {
        RuntimeConfig {
            seed: 7,
            max_steps: 1_000_000,
            deterministic: true,
        }
    }
}

impl RuntimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Handle given to an agent while it processes one message.
pub struct Context<'a> {
    me: &'a AgentId,
    outbox: Vec<(AgentId, Payload)>,
}

impl Context<'_> {
    pub fn me(&self) -> &AgentId {
        self.me
    }

    pub fn send(&mut self, to: &AgentId, payload: Payload) {
        self.outbox.push((to.clone(), payload));
    }
}

pub trait Agent: Any + Send {
    fn kind(&self) -> AgentKind;

    fn handle(&mut self, msg: &Message, ctx: &mut Context<'_>) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub seq: u64,
    pub from: AgentId,
    pub to: AgentId,
    pub kind: MessageKind,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}", self.seq, self.from, self.to, self.kind)
    }
}

/// An error raised by an agent while handling a message. Delivery continues.
#[derive(Debug)]
pub struct AgentFailure {
    pub seq: u64,
    pub agent: AgentId,
    pub kind: MessageKind,
    pub error: Error,
}

struct Slot {
    agent: Box<dyn Agent>,
    mailbox: VecDeque<Message>,
}

pub struct Runtime {
    agents: BTreeMap<AgentId, Slot>,
    next_seq: u64,
    sent: u64,
    delivered: u64,
    trace: Vec<TraceEntry>,
    failures: Vec<AgentFailure>,
}

impl Default for Runtime {
    fn default() -> Self {
        Self::new()
    }
}

impl Runtime {
    pub fn new() -> Self {
        Runtime {
            agents: BTreeMap::new(),
            next_seq: 1,
            sent: 0,
            delivered: 0,
            trace: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn spawn(&mut self, name: &str, agent: Box<dyn Agent>) -> Result<AgentId> {
        let id = AgentId::new(name)?;
        if self.agents.contains_key(&id) {
            return Err(Error::DuplicateAgent(name.to_string()));
        }
        self.agents.insert(
            id.clone(),
            Slot {
                agent,
                mailbox: VecDeque::new(),
            },
        );
        Ok(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.agents.keys().any(|k| k.as_str() == id)
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = &AgentId> {
        self.agents.keys()
    }

    /// Queues `msg` for its recipient and returns the assigned sequence number.
    pub fn send(&mut self, mut msg: Message) -> Result<u64> {
        let seq = self.next_seq;
        let slot = self
            .agents
            .get_mut(&msg.to)
            .ok_or_else(|| Error::UnknownRecipient(msg.to.to_string()))?;
        msg.seq = seq;
        slot.mailbox.push_back(msg);
        self.next_seq += 1;
        self.sent += 1;
        Ok(seq)
    }

    pub fn pending(&self) -> usize {
        self.agents.values().map(|s| s.mailbox.len()).sum()
    }

    /// Delivers queued messages until every mailbox is empty.
    ///
    /// Returns the number of deliveries made by this call.
    pub fn run_until_idle(&mut self, config: &RuntimeConfig) -> Result<u64> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut steps = 0u64;
        loop {
            let next = if config.deterministic {
                self.oldest_mailbox()
            } else {
                self.random_mailbox(&mut rng)
            };
            let Some(id) = next else {
                return Ok(steps);
            };
            if steps == config.max_steps {
                return Err(Error::StepBudgetExceeded {
                    max_steps: config.max_steps,
                    pending: self.pending(),
                });
            }
            self.deliver_one(&id);
            steps += 1;
        }
    }

    fn oldest_mailbox(&self) -> Option<AgentId> {
        self.agents
            .iter()
            .filter_map(|(id, slot)| slot.mailbox.front().map(|m| (m.seq, id)))
            .min_by_key(|(seq, _)| *seq)
            .map(|(_, id)| id.clone())
    }

    fn random_mailbox(&self, rng: &mut ChaCha8Rng) -> Option<AgentId> {
        let ready: Vec<&AgentId> = self
            .agents
            .iter()
            .filter(|(_, slot)| !slot.mailbox.is_empty())
            .map(|(id, _)| id)
            .collect();
        if ready.is_empty() {
            return None;
        }
        Some(ready[rng.random_range(0..ready.len())].clone())
    }

    fn deliver_one(&mut self, id: &AgentId) {
        let slot = self.agents.get_mut(id).expect("scheduled agent exists");
        let msg = slot.mailbox.pop_front().expect("scheduled mailbox non-empty");
        self.delivered += 1;
        self.trace.push(TraceEntry {
            seq: msg.seq,
            from: msg.from.clone(),
            to: msg.to.clone(),
            kind: msg.kind(),
        });
        let mut ctx = Context {
            me: id,
            outbox: Vec::new(),
        };
        if let Err(error) = slot.agent.handle(&msg, &mut ctx) {
            self.failures.push(AgentFailure {
                seq: msg.seq,
                agent: id.clone(),
                kind: msg.kind(),
                error,
            });
        }
        let from = id.clone();
        for (to, payload) in ctx.outbox {
            let out = Message::new(from.clone(), to, payload);
            let kind = out.kind();
            if let Err(error) = self.send(out) {
                self.failures.push(AgentFailure {
                    seq: msg.seq,
                    agent: from.clone(),
                    kind,
                    error,
                });
            }
        }
    }

    pub fn sent_count(&self) -> u64 {
        self.sent
    }

    pub fn delivered_count(&self) -> u64 {
        self.delivered
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    /// Trace as text: one `seq<TAB>from<TAB>to<TAB>kind` line per delivery.
    pub fn trace_log(&self) -> String {
        let mut out = String::new();
        for entry in &self.trace {
            out.push_str(&entry.to_string());
            out.push('\n');
        }
        out
    }

    pub fn failures(&self) -> &[AgentFailure] {
        &self.failures
    }

    /// Removes and returns the failures collected so far.
    pub fn take_failures(&mut self) -> Vec<AgentFailure> {
        std::mem::take(&mut self.failures)
    }

    pub fn agent<T: Agent>(&self, id: &str) -> Option<&T> {
        let slot = self.agents.iter().find(|(k, _)| k.as_str() == id)?.1;
        let any: &dyn Any = slot.agent.as_ref();
        any.downcast_ref::<T>()
    }

    /// Direct mutable access, for restoring persisted state while the
    /// runtime is idle. Never call while messages are in flight.
    pub fn agent_mut<T: Agent>(&mut self, id: &str) -> Option<&mut T> {
        let slot = self.agents.iter_mut().find(|(k, _)| k.as_str() == id)?.1;
        let any: &mut dyn Any = slot.agent.as_mut();
        any.downcast_mut::<T>()
    }
}
