use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{build_features, Vocabulary};
use crate::error::{Error, Result};
use crate::ingestion::{ConceptScore, MetadataRecord, HIST_DIM};
use crate::ontology::OntologyStore;

/// Confidence needed before a concept is attached to a record.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            lambda: 1e-4,
            epochs: 10,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub record: MetadataRecord,
    pub concept_id: String,
}

/// One line of a labels file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelLine {
    pub doc_id: String,
    pub concept_id: String,
}

pub fn load_labels(path: &Path) -> Result<Vec<LabelLine>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::InvalidArgument(format!("{}:{}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(out)
}

/// One-vs-rest linear classifiers over text + visual features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub concepts: Vec<String>,
    pub vocab: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub visual_dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub hyper: Hyper,
}

impl ClassifierModel {
    pub fn dimension(&self) -> usize {
        self.vocab.len() + self.visual_dim
    }

    fn vocabulary(&self) -> Vocabulary {
        Vocabulary {
            index: self.vocab.clone(),
            idf: self.idf.clone(),
        }
    }

    pub fn features(&self, record: &MetadataRecord) -> Vec<f64> {
        build_features(record, &self.vocabulary(), self.visual_dim)
    }

    pub fn margins(&self, record: &MetadataRecord) -> Vec<f64> {
        let x = self.features(record);
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, &x) + b)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ClassifierModel = serde_json::from_str(text).map_err(|e| Error::CorruptStore(format!("model: {e}")))?;
        let dim = m.dimension();
        let dense = m.vocab.values().copied().collect::<BTreeSet<_>>() == (0..m.vocab.len()).collect::<BTreeSet<_>>();
        if !dense
            || m.idf.len() != m.vocab.len()
            || m.weights.len() != m.concepts.len()
            || m.biases.len() != m.concepts.len()
            || m.weights.iter().any(|w| w.len() != dim)
        {
            return Err(Error::CorruptStore("model: inconsistent dimensions".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains one hinge-loss detector per concept with Pegasos-style stochastic
/// subgradient descent (step `1/(lambda*t)`).
///
/// The bias is learned as the weight of a constant feature, so it is
/// regularized together with the other weights.
pub fn train(examples: &[LabeledExample], ontology: &OntologyStore, hyper: Hyper) -> Result<ClassifierModel> {
    if examples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if !(hyper.lambda > 0.0) || hyper.epochs == 0 {
        return Err(Error::InvalidArgument("lambda must be > 0 and epochs >= 1".into()));
    }
    for ex in examples {
        if ontology.concept(&ex.concept_id).is_none() {
            return Err(Error::UnknownConcept(ex.concept_id.clone()));
        }
    }
    let concepts: Vec<String> = examples
        .iter()
        .map(|e| e.concept_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if concepts.len() < 2 {
        return Err(Error::InsufficientClasses(concepts.len()));
    }

    let vocab = Vocabulary::fit(examples.iter().map(|e| &e.record));
    let visual_dim = examples
        .iter()
        .find_map(|e| e.record.shots.first().map(|s| s.keyframe_hist.len()))
        .unwrap_or(HIST_DIM);
    let xs: Vec<Vec<f64>> = examples
        .iter()
        .map(|e| {
            let mut x = build_features(&e.record, &vocab, visual_dim);
            x.push(1.0);
            x
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let orders: Vec<Vec<usize>> = (0..hyper.epochs)
        .map(|_| {
            let mut order: Vec<usize> = (0..examples.len()).collect();
            order.shuffle(&mut rng);
            order
        })
        .collect();

    let dim = vocab.len() + visual_dim + 1;
    let mut weights = Vec::with_capacity(concepts.len());
    let mut biases = Vec::with_capacity(concepts.len());
    for concept in &concepts {
        let ys: Vec<f64> = examples
            .iter()
            .map(|e| if &e.concept_id == concept { 1.0 } else { -1.0 })
            .collect();
        let mut w = vec![0.0; dim];
        let mut t = 0u64;
        for order in &orders {
            for &i in order {
                t += 1;
                let eta = 1.0 / (hyper.lambda * t as f64);
                let violated = ys[i] * dot(&w, &xs[i]) < 1.0;
                let shrink = 1.0 - eta * hyper.lambda;
                w.iter_mut().for_each(|v| *v *= shrink);
                if violated {
                    for (v, x) in w.iter_mut().zip(&xs[i]) {
                        *v += eta * ys[i] * x;
                    }
                }
            }
        }
        biases.push(w.pop().expect("bias slot"));
        weights.push(w);
    }

    Ok(ClassifierModel {
        concepts,
        vocab: vocab.index,
        idf: vocab.idf,
        visual_dim,
        weights,
        biases,
        hyper,
    })
}

/// Logistic squashing, kept strictly inside (0, 1) where f64 would
/// otherwise round large margins to exactly 0 or 1.
fn squash(margin: f64) -> f64 {
    (1.0 / (1.0 + (-margin).exp())).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Every concept with its squashed margin, best first (ties by id).
pub fn classify(model: &ClassifierModel, record: &MetadataRecord) -> Vec<ConceptScore> {
    let mut out: Vec<ConceptScore> = model
        .concepts
        .iter()
        .zip(model.margins(record))
        .map(|(id, m)| ConceptScore {
            concept_id: id.clone(),
            confidence: squash(m),
        })
        .collect();
    out.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.concept_id.cmp(&b.concept_id))
    });
    out
}

/// Top-1 accuracy.
pub fn evaluate(model: &ClassifierModel, examples: &[LabeledExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    let hits = examples
        .iter()
        .filter(|e| {
            classify(model, &e.record)
                .first()
                .is_some_and(|top| top.concept_id == e.concept_id)
        })
        .count();
    Ok(hits as f64 / examples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classification::features::tests::record;
    use crate::ontology::Concept;
    use proptest::prelude::*;

    fn ontology() -> OntologyStore {
        OntologyStore::from_concepts(vec![
            Concept::new("alpha", "alpha", "d", ["alpha"], None),
            Concept::new("beta", "beta", "d", ["beta"], None),
            Concept::new("gamma", "gamma", "d", ["gamma"], None),
        ])
        .unwrap()
    }

    fn ex(id: &str, term: &str, concept: &str) -> LabeledExample {
        LabeledExample {
            record: record(id, &[(term, 1)], vec![0.25; 4]),
            concept_id: concept.into(),
        }
    }

    /// Two classes, each identified by a disjoint one-hot text feature.
    fn separable() -> Vec<LabeledExample> {
        (0..5)
            .map(|i| ex(&format!("a{i}"), "sun", "alpha"))
            .chain((0..5).map(|i| ex(&format!("b{i}"), "moon", "beta")))
            .collect()
    }

    #[test]
    fn separable_set_is_learned_perfectly() {
        let m = train(&separable(), &ontology(), Hyper::default()).unwrap();
        assert_eq!(m.concepts, vec!["alpha", "beta"]);
        assert_eq!(m.weights[0].len(), m.dimension());
        // Oracle: direct evaluation on the training set.
        assert_eq!(evaluate(&m, &separable()).unwrap(), 1.0);
        for e in separable() {
            assert_eq!(classify(&m, &e.record)[0].concept_id, e.concept_id);
        }
    }

    #[test]
    fn training_preconditions() {
        let o = ontology();
        assert!(matches!(train(&[], &o, Hyper::default()), Err(Error::EmptyTrainingSet)));
        let one: Vec<_> = (0..3).map(|i| ex(&i.to_string(), "sun", "alpha")).collect();
        assert!(matches!(
            train(&one, &o, Hyper::default()),
            Err(Error::InsufficientClasses(1))
        ));
        let bad = vec![ex("a", "sun", "alpha"), ex("b", "moon", "nope")];
        assert_eq!(train(&bad, &o, Hyper::default()).unwrap_err().code(), "UnknownConcept");
    }

    #[test]
    fn training_is_deterministic() {
        let a = train(&separable(), &ontology(), Hyper::default()).unwrap();
        let b = train(&separable(), &ontology(), Hyper::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn zero_features_rank_by_bias() {
        let mut m = train(&separable(), &ontology(), Hyper::default()).unwrap();
        m.biases = vec![0.3, 0.3];
        let zero = record("z", &[], vec![0.0; 4]);
        let out = classify(&m, &zero);
        assert_eq!(out[0].concept_id, "alpha");
        assert_eq!(out[1].concept_id, "beta");
        assert!((out[0].confidence - squash(0.3)).abs() < 1e-15);
        m.biases = vec![-1.0, 2.0];
        let out = classify(&m, &zero);
        assert_eq!(out[0].concept_id, "beta");
        assert!((out[0].confidence - squash(2.0)).abs() < 1e-15);
    }

    #[test]
    fn identical_records_identical_output() {
        let m = train(&separable(), &ontology(), Hyper::default()).unwrap();
        let r = record("q", &[("sun", 2), ("moon", 1)], vec![0.25; 4]);
        assert_eq!(classify(&m, &r), classify(&m, &r.clone()));
    }

    #[test]
    fn wrong_labels_give_zero_accuracy() {
        let m = train(&separable(), &ontology(), Hyper::default()).unwrap();
        let wrong: Vec<_> = vec![
            ex("a", "sun", "beta"),
            ex("b", "sun", "beta"),
            ex("c", "moon", "alpha"),
            ex("d", "moon", "alpha"),
        ];
        assert_eq!(evaluate(&m, &wrong).unwrap(), 0.0);
        assert!(matches!(evaluate(&m, &[]), Err(Error::EmptyEvaluationSet)));
    }

    #[test]
    fn model_json_round_trip_and_corruption() {
        let m = train(&separable(), &ontology(), Hyper::default()).unwrap();
        assert_eq!(ClassifierModel::from_json(&m.to_json()).unwrap(), m);
        let mut broken = m.clone();
        broken.weights[0].pop();
        assert_eq!(
            ClassifierModel::from_json(&broken.to_json()).unwrap_err().code(),
            "CorruptStore"
        );
    }

    proptest! {
        #[test]
        fn confidences_in_unit_interval_and_totally_ordered(
            sun in 0u32..4, moon in 0u32..4, h in prop::collection::vec(0.0f64..1.0, 4)
        ) {
            let m = train(&separable(), &ontology(), Hyper::default()).unwrap();
            let r = record("q", &[("sun", sun), ("moon", moon)], h);
            let out = classify(&m, &r);
            for c in &out {
                prop_assert!(c.confidence > 0.0 && c.confidence < 1.0);
            }
            for w in out.windows(2) {
                prop_assert!(w[0].confidence > w[1].confidence
                    || (w[0].confidence == w[1].confidence && w[0].concept_id < w[1].concept_id));
            }
        }

        #[test]
        fn positive_scaling_preserves_ranking(c in 0.01f64..100.0, sun in 0u32..4, moon in 0u32..4) {
            let m = train(&separable(), &ontology(), Hyper::default()).unwrap();
            let mut scaled = m.clone();
            scaled.weights.iter_mut().flatten().for_each(|w| *w *= c);
            scaled.biases.iter_mut().for_each(|b| *b *= c);
            let r = record("q", &[("sun", sun), ("moon", moon)], vec![0.25; 4]);
            let ids = |m: &ClassifierModel| classify(m, &r).into_iter().map(|s| s.concept_id).collect::<Vec<_>>();
            let (a, b) = (ids(&m), ids(&scaled));
            // Exact ties may break differently only if margins were equal.
            let margins = m.margins(&r);
            if (margins[0] - margins[1]).abs() > 1e-9 {
                prop_assert_eq!(a, b);
            }
        }
    }
}
