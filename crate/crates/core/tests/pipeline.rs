use vidmas::config::Config;
use vidmas::engine::Engine;
use vidmas::harness::{generate_corpus, SyntheticSpec};
use vidmas::knowledge_base::Tier;
use vidmas::personalization::Device;
use vidmas::runtime::RuntimeConfig;

fn session(runtime: RuntimeConfig) -> Engine {
    let spec = SyntheticSpec {
        docs_per_domain: 6,
        ..SyntheticSpec::default()
    };
    let corpus = generate_corpus(&spec).unwrap();
    let config = Config {
        runtime,
        ..Config::default()
    };
    let mut engine = Engine::in_memory(config).unwrap();
    engine.ingest(corpus.descriptors).unwrap();
    engine.train(&corpus.training).unwrap();
    engine.create_user("ana", "MA", "ar", Device::Tablet).unwrap();
    let resp = engine.query("ana", "sports", "football goal", 3).unwrap();
    for r in &resp.output.results {
        engine.feedback("ana", &r.doc_id, 5).unwrap();
    }
    engine.reorganize(false).unwrap();
    engine
}

#[test]
fn deterministic_runs_share_a_trace() {
    let a = session(RuntimeConfig::default());
    let b = session(RuntimeConfig::default());
    let log = a.runtime().trace_log();
    assert!(!log.is_empty());
    assert_eq!(log, b.runtime().trace_log());
    for (i, line) in log.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 4, "{line}");
        assert!(fields[0].parse::<u64>().is_ok(), "{line}");
        if i == 0 {
            assert_eq!(fields[1], "gateway");
        }
    }
}

#[test]
fn seeded_random_mode_is_reproducible() {
    let random = RuntimeConfig {
        deterministic: false,
        seed: 99,
        ..RuntimeConfig::default()
    };
    let a = session(random);
    let b = session(random);
    assert_eq!(a.runtime().trace_log(), b.runtime().trace_log());
    assert_eq!(a.knowledge_base(), b.knowledge_base());
}

#[test]
fn feedback_flows_through_the_agents() {
    let engine = session(RuntimeConfig::default());
    let log = engine.runtime().trace_log();
    for kind in [
        "DescriptorSubmitted",
        "DocumentExtracted",
        "DocumentClassified",
        "ModelUpdated",
        "QueryRequest",
        "QueryResponse",
        "FeedbackRecorded",
        "DepositPheromone",
        "ReorganizeTick",
    ] {
        assert!(log.contains(kind), "no {kind} delivered");
    }
    let active = engine.knowledge_base().documents_in(Tier::Active).count();
    assert!(active > 0);
    let profile = engine.personalization().avatar("ana").unwrap();
    assert!(profile.domain_prefs("sports").is_some_and(|p| !p.is_empty()));
}
