use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::descriptor::VideoDescriptor;
use super::shots::{detect_shots, Shot};
use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaInfo {
    pub duration_s: f64,
    pub format: Option<String>,
    pub frame_count: usize,
}

/// One segmented shot together with a copy of its keyframe histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    #[serde(flatten)]
    pub shot: Shot,
    pub start_t: f64,
    pub end_t: f64,
    pub keyframe_hist: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptScore {
    pub concept_id: String,
    pub confidence: f64,
}

/// Description of one video in the spirit of an MPEG-7 segment
/// decomposition: media information, shots with keyframe colour
/// descriptors, free-text annotation terms and assigned semantic concepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataRecord {
    pub doc_id: String,
    pub uri: String,
    pub title: String,
    pub media_info: MediaInfo,
    pub shots: Vec<ShotRecord>,
    /// Term bag: lowercased term -> occurrence count.
    pub text_terms: BTreeMap<String, u32>,
    pub meta: BTreeMap<String, String>,
    pub concepts: Vec<ConceptScore>,
}

impl MetadataRecord {
    pub fn concept_confidence(&self, concept_id: &str) -> Option<f64> {
        self.concepts
            .iter()
            .find(|c| c.concept_id == concept_id)
            .map(|c| c.confidence)
    }

    pub fn has_any_concept<'a>(&self, mut ids: impl Iterator<Item = &'a str>) -> bool {
        ids.any(|id| self.concepts.iter().any(|c| c.concept_id == id))
    }

    /// Mean keyframe histogram over all shots, zero-padded to `dim`.
    pub fn mean_keyframe_hist(&self, dim: usize) -> Vec<f64> {
        let mut mean = vec![0.0; dim];
        if self.shots.is_empty() {
            return mean;
        }
        for shot in &self.shots {
            for (m, v) in mean.iter_mut().zip(&shot.keyframe_hist) {
                *m += v;
            }
        }
        let n = self.shots.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Replaces the concept list, validating confidences.
    pub fn set_concepts(&mut self, concepts: Vec<ConceptScore>) -> Result<()> {
        if let Some(bad) = concepts.iter().find(|c| !(0.0..=1.0).contains(&c.confidence)) {
            return Err(Error::InvalidArgument(format!(
                "confidence {} for `{}` outside [0, 1]",
                bad.confidence, bad.concept_id
            )));
        }
        self.concepts = concepts;
        Ok(())
    }
}

/// Segments the descriptor into shots and collects its textual terms.
pub fn extract(descriptor: &VideoDescriptor, theta: f64) -> Result<MetadataRecord> {
    descriptor.validate()?;
    let shots = detect_shots(&descriptor.frames, theta)?;
    let shots = shots
        .into_iter()
        .map(|shot| ShotRecord {
            shot,
            start_t: descriptor.frames[shot.start_idx].t,
            end_t: descriptor.frames[shot.end_idx].t,
            keyframe_hist: descriptor.frames[shot.keyframe_idx].hist.clone(),
        })
        .collect();

    let mut text_terms = BTreeMap::new();
    let sources = std::iter::once(descriptor.title.as_str())
        .chain(descriptor.transcript.iter().map(|s| s.text.as_str()))
        .chain(descriptor.captions.iter().map(String::as_str))
        .chain(descriptor.tags.iter().map(String::as_str));
    for text in sources {
        for term in tokenize(text) {
            *text_terms.entry(term).or_insert(0) += 1;
        }
    }

    Ok(MetadataRecord {
        doc_id: descriptor.id.clone(),
        uri: descriptor.uri.clone(),
        title: descriptor.title.clone(),
        media_info: MediaInfo {
            duration_s: descriptor.duration_s,
            format: descriptor.meta.get("format").cloned(),
            frame_count: descriptor.frames.len(),
        },
        shots,
        text_terms,
        meta: descriptor.meta.clone(),
        concepts: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryboardFrame {
    pub shot: usize,
    pub frame: usize,
    pub hist: Vec<f64>,
}

/// Keyframes of a video in order of appearance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storyboard {
    pub doc_id: String,
    pub keyframes: Vec<StoryboardFrame>,
}

/// Picks at most `n` keyframes, spread uniformly over the shots.
pub fn summarize(record: &MetadataRecord, n: usize) -> Result<Storyboard> {
    if n == 0 {
        return Err(Error::InvalidArgument("storyboard length must be at least 1".into()));
    }
    let k = record.shots.len();
    let picks: Vec<usize> = if n >= k {
        (0..k).collect()
    } else if n == 1 {
        vec![0]
    } else {
        (0..n).map(|i| i * (k - 1) / (n - 1)).collect()
    };
    let keyframes = picks
        .into_iter()
        .map(|i| {
            let s = &record.shots[i];
            StoryboardFrame {
                shot: i,
                frame: s.shot.keyframe_idx,
                hist: s.keyframe_hist.clone(),
            }
        })
        .collect();
    Ok(Storyboard {
        doc_id: record.doc_id.clone(),
        keyframes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::descriptor::tests::descriptor;
    use crate::ingestion::descriptor::TranscriptSegment;
    use crate::ingestion::HIST_DIM;

    fn record_with_shots(k: usize) -> MetadataRecord {
        let mut d = descriptor("v", k);
        for (i, f) in d.frames.iter_mut().enumerate() {
            // Alternate between two peaked histograms so every frame is a cut.
            let mut h = vec![0.4 / HIST_DIM as f64; HIST_DIM];
            h[i % 2] += 0.6;
            f.hist = h;
        }
        let r = extract(&d, 0.4).unwrap();
        assert_eq!(r.shots.len(), k);
        r
    }

    #[test]
    fn title_terms_are_tokenized() {
        let r = extract(&descriptor("v1", 3), 0.4).unwrap();
        for t in ["world", "cup", "final"] {
            assert!(r.text_terms.contains_key(t), "{t}");
        }
        assert!(r.concepts.is_empty());
    }

    #[test]
    fn constant_frames_give_one_shot() {
        let r = extract(&descriptor("v1", 10), 0.4).unwrap();
        assert_eq!(r.shots.len(), 1);
        assert_eq!(r.shots[0].shot.keyframe_idx, 4);
    }

    #[test]
    fn bad_histogram_is_invalid_descriptor() {
        let mut d = descriptor("v1", 3);
        d.frames[0].hist = vec![0.8 / HIST_DIM as f64; HIST_DIM];
        assert_eq!(extract(&d, 0.4).unwrap_err().code(), "InvalidDescriptor");
    }

    #[test]
    fn all_text_sources_counted() {
        let mut d = descriptor("v1", 2);
        d.title = "Derby".into();
        d.transcript = vec![TranscriptSegment {
            t0: 0.0,
            t1: 1.0,
            text: "the derby goal".into(),
        }];
        d.captions = vec!["GOAL!".into()];
        d.tags = vec!["a".into(), "football".into()];
        let r = extract(&d, 0.4).unwrap();
        assert_eq!(r.text_terms["derby"], 2);
        assert_eq!(r.text_terms["goal"], 2);
        assert_eq!(r.text_terms["football"], 1);
        assert!(!r.text_terms.contains_key("a"));
    }

    #[test]
    fn storyboard_keeps_all_when_budget_exceeds_shots() {
        let sb = summarize(&record_with_shots(3), 5).unwrap();
        let shots: Vec<_> = sb.keyframes.iter().map(|k| k.shot).collect();
        assert_eq!(shots, vec![0, 1, 2]);
    }

    #[test]
    fn storyboard_uniform_subsample() {
        let sb = summarize(&record_with_shots(9), 3).unwrap();
        let shots: Vec<_> = sb.keyframes.iter().map(|k| k.shot).collect();
        assert_eq!(shots, vec![0, 4, 8]);
    }

    #[test]
    fn storyboard_single_frame_and_zero_budget() {
        let r = record_with_shots(4);
        let sb = summarize(&r, 1).unwrap();
        assert_eq!(sb.keyframes.len(), 1);
        assert_eq!(sb.keyframes[0].shot, 0);
        assert!(summarize(&r, 0).is_err());
    }

    #[test]
    fn storyboard_order_strictly_increasing() {
        let r = record_with_shots(17);
        for n in 1..20 {
            let sb = summarize(&r, n).unwrap();
            assert!(sb.keyframes.windows(2).all(|w| w[0].shot < w[1].shot));
            assert_eq!(sb.keyframes.len(), n.min(17));
        }
    }

    #[test]
    fn concept_confidence_validation() {
        let mut r = record_with_shots(1);
        assert!(r
            .set_concepts(vec![ConceptScore {
                concept_id: "x".into(),
                confidence: 1.5
            }])
            .is_err());
    }
}
