//! Synthetic corpus generator and simulated users driving the full
//! ingest, classify, query, feedback and reorganize loop.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classification::{LabelLine, LabeledExample};
use crate::config::Config;
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::ingestion::{extract, FrameFeature, StdFetcher, TranscriptSegment, VideoDescriptor, DEFAULT_SHOT_THRESHOLD};
use crate::ontology::OntologyStore;
use crate::personalization::Device;
use crate::query::StaticSynonyms;

pub const CSV_HEADER: &str = "round,user,precision_at_k,p_global,active,usual,depreciated";

/// Topical vocabulary for each bundled concept.
const TOPIC_WORDS: &[(&str, &[&str])] = &[
    (
        "football",
        &[
            "football",
            "footy",
            "soccer",
            "goal",
            "striker",
            "penalty",
            "goalkeeper",
            "midfielder",
            "pitch",
        ],
    ),
    (
        "basketball",
        &[
            "basketball",
            "hoops",
            "nba",
            "dunk",
            "rebound",
            "dribble",
            "playoff",
            "hoop",
        ],
    ),
    (
        "tennis",
        &[
            "tennis",
            "wimbledon",
            "serve",
            "ace",
            "backhand",
            "racket",
            "deuce",
            "volley",
            "grandslam",
        ],
    ),
    (
        "politics",
        &[
            "politics",
            "political",
            "election",
            "parliament",
            "senate",
            "minister",
            "government",
            "campaign",
            "diplomacy",
        ],
    ),
    (
        "economy",
        &[
            "economy",
            "economic",
            "inflation",
            "stocks",
            "recession",
            "budget",
            "trade",
            "bank",
            "market",
        ],
    ),
    (
        "weather",
        &[
            "weather",
            "forecast",
            "storm",
            "rain",
            "snow",
            "flood",
            "drought",
            "temperature",
            "climate",
        ],
    ),
    (
        "painting",
        &[
            "painting",
            "painter",
            "canvas",
            "brush",
            "easel",
            "portrait",
            "fresco",
            "watercolor",
            "gallery",
        ],
    ),
    (
        "music",
        &[
            "music",
            "musical",
            "concert",
            "orchestra",
            "symphony",
            "guitar",
            "melody",
            "singer",
            "song",
        ],
    ),
    (
        "dance",
        &[
            "dance",
            "dancing",
            "ballet",
            "tango",
            "waltz",
            "salsa",
            "pirouette",
            "choreography",
            "dancer",
        ],
    ),
];

/// Words that carry no topic.
const FILLER_WORDS: &[&str] = &[
    "video",
    "clip",
    "today",
    "live",
    "highlights",
    "interview",
    "report",
    "weekly",
    "special",
    "episode",
    "review",
    "story",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimUser {
    pub id: String,
    pub country: String,
    pub language: String,
    /// Ground-truth concept the user is looking for.
    pub interest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingMode {
    /// 5 for a relevant document, 0 otherwise.
    Binary,
    /// 5 relevant, 1 for a document of the same domain, 0 otherwise.
    Graded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub domains: Vec<String>,
    pub docs_per_domain: usize,
    pub users: Vec<SimUser>,
    pub rounds: usize,
    pub k: usize,
    /// Share of documents whose labels are given to the classifier.
    pub train_fraction: f64,
    /// Share of documents whose text leans towards a sibling concept.
    pub ambiguity: f64,
    pub rating: RatingMode,
    /// Evaporate-and-reorganize cycles run after each round.
    pub ticks_per_round: usize,
}

fn user(id: &str, country: &str, language: &str, interest: &str) -> SimUser {
    SimUser {
        id: id.into(),
        country: country.into(),
        language: language.into(),
        interest: interest.into(),
    }
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 2024,
            domains: vec!["news".into(), "sports".into(), "art".into()],
            docs_per_domain: 20,
            users: vec![
                user("amina", "MA", "ar", "football"),
                user("bruno", "FR", "fr", "politics"),
                user("chen", "US", "en", "music"),
                user("dalia", "MA", "fr", "weather"),
                user("emil", "FR", "fr", "tennis"),
            ],
            rounds: 20,
            k: 5,
            train_fraction: 0.5,
            ambiguity: 0.3,
            rating: RatingMode::Binary,
            ticks_per_round: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self, ontology: &OntologyStore) -> Result<()> {
        if self.docs_per_domain == 0 || self.rounds == 0 {
            return Err(Error::InvalidArgument(
                "docs_per_domain and rounds must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.train_fraction) || !(0.0..=1.0).contains(&self.ambiguity) {
            return Err(Error::InvalidArgument(
                "train_fraction and ambiguity must lie in [0, 1]".into(),
            ));
        }
        for d in &self.domains {
            if ontology.domain_lexicon(d)?.is_empty() {
                return Err(Error::InvalidArgument(format!("domain `{d}` has no concepts")));
            }
        }
        for u in &self.users {
            if ontology.concept(&u.interest).is_none() {
                return Err(Error::UnknownConcept(u.interest.clone()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub descriptors: Vec<VideoDescriptor>,
    /// Ground truth for every document.
    pub labels: Vec<LabelLine>,
    /// Labels handed to the classifier.
    pub training: Vec<LabelLine>,
    pub ontology: OntologyStore,
    pub synonyms: StaticSynonyms,
    /// Shot boundaries planted in each descriptor (index of first frame of
    /// every shot after the first).
    pub boundaries: BTreeMap<String, Vec<usize>>,
}

impl Corpus {
    pub fn truth(&self) -> BTreeMap<&str, &str> {
        self.labels
            .iter()
            .map(|l| (l.doc_id.as_str(), l.concept_id.as_str()))
            .collect()
    }
}

/// Topic words for `concept`: the bundled table, else its synonyms.
pub fn topic_words(ontology: &OntologyStore, concept: &str) -> Vec<String> {
    if let Some((_, words)) = TOPIC_WORDS.iter().find(|(c, _)| *c == concept) {
        return words.iter().map(|w| w.to_string()).collect();
    }
    ontology
        .concept(concept)
        .map(|c| c.synonyms.iter().cloned().collect())
        .unwrap_or_default()
}

/// Sum-1 histogram: 0.4 spread uniformly, 0.6 on `peak`. Two such
/// histograms with different peaks are 1.2 apart in L1.
pub fn peaked_hist(dim: usize, peak: usize) -> Vec<f64> {
    let mut h = vec![0.4 / dim as f64; dim];
    h[peak] += 0.6;
    h
}

/// Frames made of `shot_lengths.len()` constant runs. Each run peaks on a
/// bin drawn from `palette` (or, with probability `stray`, from any bin),
/// always different from the previous run. Returns the frames and the
/// planted boundaries.
pub fn planted_frames(
    rng: &mut impl Rng,
    dim: usize,
    shot_lengths: &[usize],
    palette: &[usize],
    stray: f64,
) -> (Vec<FrameFeature>, Vec<usize>) {
    let mut frames = Vec::new();
    let mut boundaries = Vec::new();
    let mut prev: Option<usize> = None;
    for (i, len) in shot_lengths.iter().enumerate() {
        if i > 0 {
            boundaries.push(frames.len());
        }
        let peak = loop {
            let p = if palette.is_empty() || rng.random_bool(stray) {
                rng.random_range(0..dim)
            } else {
                palette[rng.random_range(0..palette.len())]
            };
            if Some(p) != prev {
                break p;
            }
        };
        prev = Some(peak);
        let hist = peaked_hist(dim, peak);
        for _ in 0..*len {
            frames.push(FrameFeature {
                t: frames.len() as f64 * 0.5,
                hist: hist.clone(),
            });
        }
    }
    (frames, boundaries)
}

/// Characteristic histogram bins of the `index`-th concept.
fn palette(index: usize, dim: usize) -> Vec<usize> {
    (0..4).map(|j| (index * 4 + j) % dim).collect()
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &'a [String], n: usize) -> Vec<&'a str> {
    (0..n)
        .map(|_| words.choose(rng).expect("non-empty word list").as_str())
        .collect()
}

/// Deterministic corpus for `spec`, using the bundled ontology and synonym
/// table.
pub fn generate_corpus(spec: &SyntheticSpec) -> Result<Corpus> {
    let ontology = OntologyStore::bundled();
    spec.validate(&ontology)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = crate::ingestion::HIST_DIM;
    let fillers: Vec<String> = FILLER_WORDS.iter().map(|w| w.to_string()).collect();
    let all_concepts: Vec<String> = ontology.concepts().map(|c| c.id.clone()).collect();

    let mut descriptors = Vec::new();
    let mut labels = Vec::new();
    let mut training = Vec::new();
    let mut boundaries = BTreeMap::new();
    for domain in &spec.domains {
        let concepts: Vec<String> = ontology.domain_lexicon(domain)?.iter().map(|c| c.id.clone()).collect();
        for i in 0..spec.docs_per_domain {
            let concept = &concepts[i % concepts.len()];
            let concept_index = all_concepts.iter().position(|c| c == concept).expect("concept listed");
            let own = topic_words(&ontology, concept);
            let sibling = if concepts.len() > 1 {
                let mut j = rng.random_range(0..concepts.len() - 1);
                if j >= i % concepts.len() {
                    j += 1;
                }
                topic_words(&ontology, &concepts[j])
            } else {
                fillers.clone()
            };
            let ambiguous = rng.random_bool(spec.ambiguity);
            let (n_own, n_sib) = if ambiguous { (1, 4) } else { (4, 1) };
            let id = format!("{domain}-{i:03}");

            // An ambiguous video is mostly described in its sibling's words.
            let title_topic = if ambiguous { &sibling } else { &own };
            let title_words = [pick(&mut rng, title_topic, 1), pick(&mut rng, &fillers, 2)].concat();
            let mut transcript_words = pick(&mut rng, &own, n_own);
            transcript_words.extend(pick(&mut rng, &sibling, n_sib));
            transcript_words.extend(pick(&mut rng, &fillers, 2));

            let n_shots = rng.random_range(1..=5);
            let lengths: Vec<usize> = (0..n_shots).map(|_| rng.random_range(2..=6)).collect();
            let (frames, planted) = planted_frames(&mut rng, dim, &lengths, &palette(concept_index, dim), 0.3);
            let duration_s = frames.last().map_or(0.0, |f| f.t) + 0.5;

            descriptors.push(VideoDescriptor {
                id: id.clone(),
                uri: format!("{id}.json"),
                title: title_words.join(" "),
                duration_s,
                frames,
                transcript: vec![TranscriptSegment {
                    t0: 0.0,
                    t1: duration_s,
                    text: transcript_words.join(" "),
                }],
                captions: vec![],
                tags: vec![domain.clone()],
                meta: [("genre".to_string(), domain.clone())].into(),
            });
            let label = LabelLine {
                doc_id: id.clone(),
                concept_id: concept.clone(),
            };
            if rng.random_bool(spec.train_fraction) {
                training.push(label.clone());
            }
            labels.push(label);
            boundaries.insert(id, planted);
        }
    }
    Ok(Corpus {
        descriptors,
        labels,
        training,
        ontology,
        synonyms: StaticSynonyms::bundled(),
        boundaries,
    })
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("item serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes `descriptors/*.json`, `index.html` (links to every descriptor),
/// `labels.jsonl`, `train.jsonl`, `ontology.json` and `synonyms.json`.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    let desc_dir = dir.join("descriptors");
    std::fs::create_dir_all(&desc_dir).map_err(|e| Error::io(&desc_dir, e))?;
    let mut index = String::from("<html><body>\n");
    for d in &corpus.descriptors {
        let path = desc_dir.join(format!("{}.json", d.id));
        std::fs::write(&path, d.to_json()).map_err(|e| Error::io(&path, e))?;
        let _ = writeln!(index, "<a href=\"descriptors/{}.json\">{}</a>", d.id, d.title);
    }
    index.push_str("</body></html>\n");
    let index_path = dir.join("index.html");
    std::fs::write(&index_path, index).map_err(|e| Error::io(&index_path, e))?;
    write_jsonl(&dir.join("labels.jsonl"), &corpus.labels)?;
    write_jsonl(&dir.join("train.jsonl"), &corpus.training)?;
    corpus.ontology.save(&dir.join("ontology.json"))?;
    corpus.synonyms.save(&dir.join("synonyms.json"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRound {
    pub user: String,
    pub precision: f64,
    /// Nothing was returned, so precision is undefined (reported as 0).
    pub undefined: bool,
    pub p_global: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub users: Vec<UserRound>,
    pub mean_precision: f64,
    pub active: usize,
    pub usual: usize,
    pub depreciated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub training_accuracy: Option<f64>,
    pub rounds: Vec<RoundMetrics>,
}

impl SimulationReport {
    /// Mean of the per-round mean precision over rounds `from..=to` (1-based).
    pub fn mean_precision(&self, from: usize, to: usize) -> f64 {
        let sel: Vec<f64> = self
            .rounds
            .iter()
            .filter(|r| r.round >= from && r.round <= to)
            .map(|r| r.mean_precision)
            .collect();
        if sel.is_empty() {
            0.0
        } else {
            sel.iter().sum::<f64>() / sel.len() as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rounds {
            for u in &r.users {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.round, u.user, u.precision, u.p_global, r.active, r.usual, r.depreciated
                );
            }
        }
        out
    }
}

/// Builds an in-memory engine over the corpus: ingest, train, create users.
pub fn setup(spec: &SyntheticSpec, corpus: &Corpus, config: Config) -> Result<(Engine, Option<f64>)> {
    let mut config = config;
    config.data_dir = None;
    let mut engine = Engine::build(
        config,
        None,
        corpus.ontology.clone(),
        std::sync::Arc::new(corpus.synonyms.clone()),
        std::sync::Arc::new(StdFetcher),
    )?;
    let report = engine.ingest(corpus.descriptors.clone())?;
    if let Some(f) = report.failed.first() {
        return Err(Error::InvalidArgument(format!(
            "generated descriptor rejected: {}",
            f.message
        )));
    }
    let distinct: std::collections::BTreeSet<&str> = corpus.training.iter().map(|l| l.concept_id.as_str()).collect();
    let accuracy = if distinct.len() >= 2 {
        Some(engine.train(&corpus.training)?.training_accuracy)
    } else {
        None
    };
    for u in &spec.users {
        engine.create_user(&u.id, &u.country, &u.language, Device::Desktop)?;
    }
    Ok((engine, accuracy))
}

fn rating(mode: RatingMode, ontology: &OntologyStore, interest: &str, truth: Option<&str>) -> i64 {
    match truth {
        Some(t) if t == interest => 5,
        Some(t) if mode == RatingMode::Graded => {
            let same_domain = ontology.concept(t).map(|c| &c.domain) == ontology.concept(interest).map(|c| &c.domain);
            i64::from(same_domain)
        }
        _ => 0,
    }
}

/// Runs the feedback rounds on a prepared engine. `truth` maps doc ids to
/// their planted concept.
pub fn run_rounds(
    engine: &mut Engine,
    spec: &SyntheticSpec,
    truth: &BTreeMap<&str, &str>,
) -> Result<Vec<RoundMetrics>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let mut rounds = Vec::with_capacity(spec.rounds);
    for round in 1..=spec.rounds {
        let mut users = Vec::with_capacity(spec.users.len());
        for u in &spec.users {
            let concept = engine
                .ontology()
                .concept(&u.interest)
                .ok_or_else(|| Error::UnknownConcept(u.interest.clone()))?
                .clone();
            let names: Vec<String> = concept.synonyms.iter().cloned().collect();
            let words = topic_words(engine.ontology(), &u.interest);
            let text = format!("{} {}", pick(&mut rng, &names, 1)[0], pick(&mut rng, &words, 1)[0]);
            let resp = engine.query(&u.id, &concept.domain, &text, spec.k)?;
            let results = &resp.output.results;
            let relevant = results
                .iter()
                .filter(|r| truth.get(r.doc_id.as_str()) == Some(&u.interest.as_str()))
                .count();
            for r in results {
                let score = rating(
                    spec.rating,
                    engine.ontology(),
                    &u.interest,
                    truth.get(r.doc_id.as_str()).copied(),
                );
                engine.feedback(&u.id, &r.doc_id, score)?;
            }
            users.push(UserRound {
                user: u.id.clone(),
                precision: if results.is_empty() {
                    0.0
                } else {
                    relevant as f64 / results.len() as f64
                },
                undefined: results.is_empty(),
                p_global: resp.output.performance.p_global,
            });
        }
        for _ in 0..spec.ticks_per_round {
            engine.reorganize(true)?;
        }
        let stats = engine.stats().kb;
        let mean_precision = if users.is_empty() {
            0.0
        } else {
            users.iter().map(|u| u.precision).sum::<f64>() / users.len() as f64
        };
        rounds.push(RoundMetrics {
            round,
            users,
            mean_precision,
            active: stats.active,
            usual: stats.usual,
            depreciated: stats.depreciated,
        });
    }
    Ok(rounds)
}

/// Generates the corpus, prepares an engine and runs every round.
pub fn simulate(spec: &SyntheticSpec, config: Config) -> Result<SimulationReport> {
    let corpus = generate_corpus(spec)?;
    let (mut engine, training_accuracy) = setup(spec, &corpus, config)?;
    let truth = corpus.truth();
    let rounds = run_rounds(&mut engine, spec, &truth)?;
    Ok(SimulationReport {
        training_accuracy,
        rounds,
    })
}

/// Linearly separable examples: each concept owns a distinct set of words
/// and a distinct histogram peak. Returns `(train, held_out)`.
pub fn separable_examples(
    seed: u64,
    domains: &[&str],
    per_concept: usize,
    held_out_per_concept: usize,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    let ontology = OntologyStore::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = crate::ingestion::HIST_DIM;
    let mut train = Vec::new();
    let mut held_out = Vec::new();
    let mut concept_index = 0;
    for domain in domains {
        for concept in ontology.domain_lexicon(domain)?.iter() {
            let words = topic_words(&ontology, &concept.id);
            for n in 0..per_concept + held_out_per_concept {
                let id = format!("{}-{n}", concept.id);
                let text = pick(&mut rng, &words, 4).join(" ");
                let hist = peaked_hist(dim, (concept_index * 5) % dim);
                let descriptor = VideoDescriptor {
                    id: id.clone(),
                    uri: id.clone(),
                    title: text,
                    duration_s: 1.0,
                    frames: vec![FrameFeature { t: 0.0, hist }],
                    transcript: vec![],
                    captions: vec![],
                    tags: vec![],
                    meta: BTreeMap::new(),
                };
                let example = LabeledExample {
                    record: extract(&descriptor, DEFAULT_SHOT_THRESHOLD)?,
                    concept_id: concept.id.clone(),
                };
                if n < per_concept {
                    train.push(example);
                } else {
                    held_out.push(example);
                }
            }
            concept_index += 1;
        }
    }
    Ok((train, held_out))
}
