//! Classifier agent logic: per-concept linear detectors trained on labelled
//! metadata records, combining textual and visual evidence.

mod features;
mod model;

pub use features::{build_features, Vocabulary};
pub use model::{
    classify, evaluate, load_labels, train, ClassifierModel, Hyper, LabelLine, LabeledExample,
    DEFAULT_CONFIDENCE_THRESHOLD,
};
